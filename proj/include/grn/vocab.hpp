#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace grn {

// Reserved token ids shared by every model.
enum SpecialToken : int {
  kPad = 0,
  kUnk = 1,
  kBos = 2,
  kEov = 3,  // end of verse
  kEoq = 4,  // end of quatrain
  kNumSpecial = 5,
};

inline const char* special_token_text(int id) {
  switch (id) {
    case kPad: return "<pad>";
    case kUnk: return "<unk>";
    case kBos: return "<bos>";
    case kEov: return "<eov>";
    case kEoq: return "<eoq>";
    default: return nullptr;
  }
}

class Vocab {
 public:
  Vocab() {
    for (int i = 0; i < kNumSpecial; ++i) {
      id_of_[special_token_text(i)] = i;
      token_of_.push_back(special_token_text(i));
      freq_.push_back(0);
    }
  }

  // Builds from token counts: rank by frequency, ties lexicographic,
  // keep the `cap` most frequent; the rest map to UNK.
  static Vocab build(const std::map<std::string, long>& counts, int cap = 50000) {
    std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Vocab v;
    for (const auto& [tok, n] : ranked) {
      if (static_cast<int>(v.size()) - kNumSpecial >= cap) break;
      v.id_of_[tok] = static_cast<int>(v.token_of_.size());
      v.token_of_.push_back(tok);
      v.freq_.push_back(n);
    }
    return v;
  }

  int id(const std::string& token) const {
    auto it = id_of_.find(token);
    return it == id_of_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const {
    if (id < 0 || id >= static_cast<int>(token_of_.size()))
      throw std::invalid_argument("Vocab: id out of range: " + std::to_string(id));
    return token_of_[id];
  }

  long frequency(int id) const { return freq_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return token_of_.size(); }

  // Unigram weights for corruption sampling; special ids get weight 0.
  std::vector<double> unigram_weights() const {
    std::vector<double> w(freq_.size(), 0.0);
    for (std::size_t i = kNumSpecial; i < freq_.size(); ++i)
      w[i] = static_cast<double>(freq_[i]);
    return w;
  }

  // Character inventory over kept tokens plus char-UNK (id 0) and
  // char-PAD (id 1).
  std::unordered_map<char, int> char_vocab() const {
    std::unordered_map<char, int> cv;
    int next = 2;
    for (std::size_t i = kNumSpecial; i < token_of_.size(); ++i)
      for (char c : token_of_[i])
        if (!cv.count(c)) cv[c] = next++;
    return cv;
  }

 private:
  std::unordered_map<std::string, int> id_of_;
  std::vector<std::string> token_of_;
  std::vector<long> freq_;
};

}  // namespace grn
