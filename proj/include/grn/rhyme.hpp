#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace grn {

using Pronunciation = std::vector<std::string>;

inline std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool phoneme_is_vowel(const std::string& ph) {
  return !ph.empty() && std::isdigit(static_cast<unsigned char>(ph.back()));
}

inline bool has_letter(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c); });
}

// Dictionary-backed pronunciation lookup in the standard pronouncing-
// dictionary layout:
//   WORD  PH1 PH2 ...
//   WORD(2)  PH1 ...          alternate pronunciations
//   ;;; comment
class PhoneticDict {
 public:
  PhoneticDict() = default;

  static PhoneticDict load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("PhoneticDict: cannot open " + path);
    PhoneticDict dict;
    std::string line;
    while (std::getline(is, line)) {
      if (line.rfind(";;;", 0) == 0) continue;
      std::istringstream ls(line);
      std::string word;
      if (!(ls >> word)) continue;
      auto paren = word.find('(');
      if (paren != std::string::npos) word = word.substr(0, paren);
      Pronunciation pron;
      std::string ph;
      while (ls >> ph) pron.push_back(ph);
      if (pron.empty()) continue;
      dict.entries_[lowercase(word)].push_back(std::move(pron));
    }
    return dict;
  }

  void add(const std::string& word, Pronunciation pron) {
    entries_[lowercase(word)].push_back(std::move(pron));
  }

  bool contains(const std::string& word) const {
    return entries_.count(lowercase(word)) > 0;
  }

  const std::vector<Pronunciation>* lookup(const std::string& word) const {
    auto it = entries_.find(lowercase(word));
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [w, _] : entries_) out.push_back(w);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, std::vector<Pronunciation>> entries_;
};

// Phoneme suffix from the last primary-stressed vowel; falls back to the
// last stressed vowel of any kind, then the last vowel.
inline std::optional<Pronunciation> rhyme_part_of(const Pronunciation& pron) {
  int pick = -1;
  for (int pass = 0; pass < 3 && pick < 0; ++pass) {
    for (int i = static_cast<int>(pron.size()) - 1; i >= 0; --i) {
      if (!phoneme_is_vowel(pron[i])) continue;
      char stress = pron[i].back();
      if ((pass == 0 && stress == '1') || (pass == 1 && stress != '0') || pass == 2) {
        pick = i;
        break;
      }
    }
  }
  if (pick < 0) return std::nullopt;
  return Pronunciation(pron.begin() + pick, pron.end());
}

struct RhymeOptions {
  bool allow_self_rhyme = true;
  // Lenient scheme matching: letters that differ impose no non-rhyme
  // constraint. Strict mode requires distinct letters not to rhyme.
  bool strict_scheme = false;
};

class RhymeJudge {
 public:
  explicit RhymeJudge(PhoneticDict dict, RhymeOptions opts = {})
      : dict_(std::move(dict)), opts_(opts) {}

  const PhoneticDict& dict() const { return dict_; }
  const RhymeOptions& options() const { return opts_; }

  // Rhyme parts of every pronunciation of `word`, stress digits stripped
  // for comparison; empty list when the word is out of dictionary.
  std::vector<Pronunciation> rhyme_parts(const std::string& word) const {
    std::vector<Pronunciation> out;
    const auto* prons = dict_.lookup(word);
    if (!prons) return out;
    for (const auto& pron : *prons) {
      auto part = rhyme_part_of(pron);
      if (!part) continue;
      for (auto& ph : *part)
        if (phoneme_is_vowel(ph)) ph.pop_back();
      out.push_back(std::move(*part));
    }
    return out;
  }

  bool rhymes(const std::string& a, const std::string& b) const {
    std::string wa = lowercase(a), wb = lowercase(b);
    if (wa == wb) return opts_.allow_self_rhyme;
    auto pa = rhyme_parts(wa);
    auto pb = rhyme_parts(wb);
    if (!pa.empty() && !pb.empty()) {
      for (const auto& x : pa)
        for (const auto& y : pb)
          if (x == y) return true;
      return false;
    }
    // A covered and an uncovered word never rhyme; two uncovered words
    // fall back to the suffix heuristic.
    if (pa.empty() != pb.empty()) return false;
    return suffix_heuristic(wa, wb);
  }

 private:
  static bool suffix_heuristic(const std::string& a, const std::string& b) {
    std::size_t n = 0;
    while (n < a.size() && n < b.size() && a[a.size() - 1 - n] == b[b.size() - 1 - n]) ++n;
    if (n >= 4) return true;
    if (n >= 3) {
      std::string suffix = a.substr(a.size() - n);
      for (char c : suffix)
        if (std::string("aeiouy").find(c) != std::string::npos) return true;
    }
    return false;
  }

  PhoneticDict dict_;
  RhymeOptions opts_;
};

// Canonical scheme string: first letter 'A', each new letter the successor
// of the max used so far. Word i joins the earliest j < i it rhymes with.
inline std::string label_scheme(const RhymeJudge& judge,
                                const std::vector<std::string>& end_words) {
  if (end_words.size() < 2)
    throw std::invalid_argument("label_scheme: need at least 2 end words");
  std::string label;
  char next = 'A';
  for (std::size_t i = 0; i < end_words.size(); ++i) {
    char assigned = 0;
    for (std::size_t j = 0; j < i; ++j) {
      if (judge.rhymes(end_words[i], end_words[j])) {
        assigned = label[j];
        break;
      }
    }
    if (!assigned) assigned = next++;
    label.push_back(assigned);
  }
  return label;
}

inline bool matches_scheme(const RhymeJudge& judge,
                           const std::vector<std::string>& end_words,
                           const std::string& target) {
  if (end_words.size() != target.size())
    throw std::invalid_argument("matches_scheme: verse count " +
                                std::to_string(end_words.size()) +
                                " does not match scheme " + target);
  for (std::size_t i = 0; i < end_words.size(); ++i)
    for (std::size_t j = i + 1; j < end_words.size(); ++j) {
      bool same = target[i] == target[j];
      bool r = judge.rhymes(end_words[i], end_words[j]);
      if (same && !r) return false;
      if (!same && r && judge.options().strict_scheme) return false;
    }
  return true;
}

// Verse-final token containing a letter; trailing punctuation tokens skipped.
inline std::string end_word(const std::vector<std::string>& verse_tokens) {
  for (auto it = verse_tokens.rbegin(); it != verse_tokens.rend(); ++it)
    if (has_letter(*it)) return *it;
  throw std::invalid_argument("end_word: verse has no alphabetic token");
}

}  // namespace grn
