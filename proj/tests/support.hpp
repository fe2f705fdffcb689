#pragma once

// Shared fixtures for the test suite: a synthetic desk-scale corpus whose
// quatrains follow real rhyme schemes drawn from the fixture dictionary.

#include <sstream>
#include <string>
#include <vector>

#include "grn/corpus.hpp"
#include "grn/rhyme.hpp"
#include "grn/rng.hpp"

#ifndef GRN_DATA_DIR
#define GRN_DATA_DIR "data"
#endif

namespace fixtures {

inline std::string data_path(const std::string& name) {
  return std::string(GRN_DATA_DIR) + "/" + name;
}

inline const grn::PhoneticDict& dict() {
  static grn::PhoneticDict d = grn::PhoneticDict::load(data_path("dict.txt"));
  return d;
}

// Rhyme families used for verse-final words; one row per family, words
// covered by the fixture dictionary and mutually rhyming.
inline const std::vector<std::vector<std::string>>& rhyme_families() {
  static const std::vector<std::vector<std::string>> families = {
      {"chill", "ill", "hill", "still", "will", "fill", "skill", "mill"},
      {"play", "way", "away", "decay", "today", "day", "say", "stay"},
      {"snow", "glow", "flow", "grow", "slow", "know", "low", "show"},
      {"sky", "fly", "cry", "high", "sigh", "die", "why", "lie"},
      {"brood", "mood", "food", "rude", "crude"},
      {"ache", "lake", "make", "take", "wake", "sake", "brake"},
      {"drear", "near", "clear", "fear", "year", "dear", "mere"},
      {"tree", "free", "sea", "be", "thee", "me", "see", "glee"},
      {"night", "light", "bright", "sight", "flight", "white"},
      {"moon", "soon", "tune", "noon", "june"},
      {"dark", "lark", "park", "mark", "spark"},
      {"rest", "best", "west", "nest", "breast", "blest"},
      {"time", "rhyme", "climb", "chime", "prime"},
      {"song", "long", "strong", "wrong", "along"},
      {"dream", "stream", "gleam", "beam", "seam"},
      {"wave", "grave", "brave", "cave", "save"},
      {"shore", "more", "before", "roar", "soar"},
      {"rain", "pain", "plain", "vain", "main", "grain"},
      {"old", "cold", "gold", "bold", "told"},
      {"heart", "art", "part", "start", "depart"},
  };
  return families;
}

inline const std::vector<std::string>& verse_prefixes() {
  static const std::vector<std::string> prefixes = {
      "the wind has turned to",
      "we wander far from",
      "a voice calls out the",
      "my heart will find the",
      "beneath the silver",
      "and all the world is",
      "the river runs to",
      "no shadow falls on",
      "i hear the distant",
      "the morning brings the",
      "her eyes were like the",
      "so ends the quiet",
  };
  return prefixes;
}

inline const std::vector<std::string>& author_names() {
  static const std::vector<std::string> names = {
      "ada marsh", "ben holt", "cora lane", "dane frost",
  };
  return names;
}

// One quatrain whose end words realize `pattern` ("AABB"/"ABAB"/"ABBA")
// using two distinct rhyme families.
inline std::vector<std::string> desk_quatrain(const std::string& pattern, grn::Rng& rng) {
  const auto& fams = rhyme_families();
  std::size_t fa = rng.index(fams.size());
  std::size_t fb = rng.index(fams.size() - 1);
  if (fb >= fa) ++fb;
  std::vector<std::string> verses;
  for (char letter : pattern) {
    const auto& fam = fams[letter == 'A' ? fa : fb];
    std::string end = fam[rng.index(fam.size())];
    const auto& prefix = verse_prefixes()[rng.index(verse_prefixes().size())];
    verses.push_back(prefix + " " + end);
  }
  return verses;
}

// Corpus file text: `quatrains` scheme-consistent quatrains spread across a
// few authors, ready for parse_corpus_stream / cmd ingest.
inline std::string desk_corpus_text(int quatrains, std::uint64_t seed) {
  static const std::vector<std::string> patterns = {"AABB", "ABAB", "ABBA"};
  grn::Rng rng(seed);
  std::ostringstream os;
  for (int i = 0; i < quatrains; ++i) {
    os << "#author: " << author_names()[rng.index(author_names().size())] << '\n';
    const auto& pattern = patterns[rng.index(patterns.size())];
    for (const auto& verse : desk_quatrain(pattern, rng)) os << verse << '\n';
    os << '\n';
  }
  return os.str();
}

inline std::vector<grn::CorpusRecord> desk_corpus(int quatrains, std::uint64_t seed) {
  std::istringstream is(desk_corpus_text(quatrains, seed));
  return grn::parse_corpus_stream(is, "<desk>");
}

inline grn::Dataset desk_dataset(int quatrains, std::uint64_t seed,
                                 grn::IngestStats* stats = nullptr) {
  grn::RhymeJudge judge(dict());
  return grn::build_dataset(desk_corpus(quatrains, seed), judge, {}, stats);
}

}  // namespace fixtures
