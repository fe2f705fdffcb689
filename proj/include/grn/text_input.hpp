#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "grn/vocab.hpp"

namespace grn {

// Character ids for the char-level encoders: 0 = char-UNK, 1 = char-PAD.
struct CharVocab {
  std::unordered_map<char, int> ids;
  int size = 2;

  static CharVocab from_vocab(const Vocab& v) {
    CharVocab cv;
    cv.ids = v.char_vocab();
    for (const auto& [c, id] : cv.ids) cv.size = std::max(cv.size, id + 1);
    return cv;
  }

  // Special tokens (markers, unk, ...) collapse to a single char-UNK step.
  std::vector<int> encode(const std::string& token) const {
    if (token.size() >= 2 && token.front() == '<' && token.back() == '>')
      return {0};
    std::vector<int> out;
    out.reserve(token.size());
    for (char c : token) {
      auto it = ids.find(c);
      out.push_back(it == ids.end() ? 0 : it->second);
    }
    if (out.empty()) out.push_back(0);
    return out;
  }
};

// Conditioning pair carried through every model call.
struct Conditioning {
  int author_id = 0;
  int scheme_id = 0;
};

}  // namespace grn
