#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grn/rhyme.hpp"
#include "support.hpp"

using namespace grn;

namespace {

// All 15 set partitions of {0,1,2,3} as block-id vectors in canonical form.
std::vector<std::vector<int>> partitions_of_four() {
  std::vector<std::vector<int>> out;
  for (int b1 = 0; b1 <= 1; ++b1)
    for (int b2 = 0; b2 <= 2; ++b2)
      for (int b3 = 0; b3 <= 3; ++b3) {
        std::vector<int> p = {0, b1, b2, b3};
        bool canonical = true;
        for (int i = 1; i < 4; ++i) {
          int max_before = *std::max_element(p.begin(), p.begin() + i);
          if (p[i] > max_before + 1) canonical = false;
        }
        if (canonical) out.push_back(p);
      }
  return out;
}

std::string partition_label(const std::vector<int>& p) {
  std::string s;
  for (int b : p) s.push_back(static_cast<char>('A' + b));
  return s;
}

// Unique partition fully consistent with the pairwise rhyme relation, or
// nullopt when none or several are.
std::optional<std::string> oracle_scheme(const RhymeJudge& judge,
                                         const std::vector<std::string>& words) {
  std::optional<std::string> found;
  for (const auto& p : partitions_of_four()) {
    bool ok = true;
    for (int i = 0; i < 4 && ok; ++i)
      for (int j = i + 1; j < 4 && ok; ++j)
        if ((p[i] == p[j]) != judge.rhymes(words[i], words[j])) ok = false;
    if (ok) {
      if (found) return std::nullopt;
      found = partition_label(p);
    }
  }
  return found;
}

}  // namespace

TEST_CASE("rhyme part extraction with stress fallbacks") {
  // Primary stress: CHILL = CH IH1 L -> IH1 L.
  auto part = rhyme_part_of({"CH", "IH1", "L"});
  REQUIRE(part.has_value());
  CHECK(*part == Pronunciation{"IH1", "L"});
  // Last primary-stressed vowel wins over later unstressed ones:
  // AWAY = AH0 W EY1 -> EY1.
  part = rhyme_part_of({"AH0", "W", "EY1"});
  CHECK(*part == Pronunciation{"EY1"});
  // No primary stress: fall back to any stressed vowel (secondary 2).
  part = rhyme_part_of({"B", "AA2", "T", "AH0"});
  CHECK(*part == Pronunciation{"AA2", "T", "AH0"});
  // No stress at all: last vowel. THE = DH AH0 -> AH0.
  part = rhyme_part_of({"DH", "AH0"});
  CHECK(*part == Pronunciation{"AH0"});
  // No vowel: no rhyme part.
  CHECK(!rhyme_part_of({"S", "T"}).has_value());
}

TEST_CASE("stress digits are stripped before comparison") {
  RhymeJudge judge(fixtures::dict());
  auto parts = judge.rhyme_parts("chill");
  REQUIRE(parts.size() == 1);
  CHECK(parts[0] == Pronunciation{"IH", "L"});
}

TEST_CASE("dictionary words rhyme exactly within their family") {
  RhymeJudge judge(fixtures::dict());
  CHECK(judge.rhymes("chill", "ill"));
  CHECK(judge.rhymes("play", "away"));
  CHECK(judge.rhymes("snow", "glow"));
  CHECK(!judge.rhymes("chill", "play"));
  CHECK(!judge.rhymes("snow", "sky"));
  // Case-insensitive.
  CHECK(judge.rhymes("Chill", "ILL"));
}

TEST_CASE("alternate pronunciations: either variant can rhyme") {
  RhymeJudge judge(fixtures::dict());
  // WIND has W IH1 N D and W AY1 N D entries.
  auto parts = judge.rhyme_parts("wind");
  CHECK(parts.size() == 2);
}

TEST_CASE("self rhyme follows the option") {
  CHECK(RhymeJudge(fixtures::dict()).rhymes("snow", "snow"));
  RhymeOptions opts;
  opts.allow_self_rhyme = false;
  CHECK(!RhymeJudge(fixtures::dict(), opts).rhymes("snow", "snow"));
}

TEST_CASE("covered and uncovered words never rhyme") {
  RhymeJudge judge(fixtures::dict());
  CHECK(!judge.rhymes("chill", "blorfill"));
  CHECK(!judge.rhymes("blorfill", "chill"));
}

TEST_CASE("uncovered pairs use the shared-suffix heuristic") {
  RhymeJudge judge(fixtures::dict());
  // >= 4 shared trailing characters.
  CHECK(judge.rhymes("blorft", "snorft"));
  // Exactly 3 shared characters containing a vowel letter.
  CHECK(judge.rhymes("mazunt", "bizunt"));
  // 3 shared consonant-only characters do not count.
  CHECK(!judge.rhymes("qarnst", "velnst"));
  // Short or no overlap.
  CHECK(!judge.rhymes("blorft", "wizzle"));
}

TEST_CASE("scheme labels are canonical and earliest-match") {
  RhymeJudge judge(fixtures::dict());
  CHECK(label_scheme(judge, {"chill", "ill", "play", "way"}) == "AABB");
  CHECK(label_scheme(judge, {"snow", "away", "decay", "today"}) == "ABBB");
  CHECK(label_scheme(judge, {"chill", "play", "ill", "way"}) == "ABAB");
  CHECK(label_scheme(judge, {"chill", "play", "way", "ill"}) == "ABBA");
  CHECK(label_scheme(judge, {"chill", "play", "snow", "sky"}) == "ABCD");
  CHECK(label_scheme(judge, {"chill", "chill", "chill", "chill"}) == "AAAA");
  CHECK_THROWS_AS(label_scheme(judge, {"chill"}), std::invalid_argument);
}

TEST_CASE("matches_scheme lenient vs strict") {
  RhymeJudge lenient(fixtures::dict());
  CHECK(matches_scheme(lenient, {"chill", "ill", "play", "way"}, "AABB"));
  CHECK(!matches_scheme(lenient, {"chill", "play", "ill", "way"}, "AABB"));
  // Lenient: AAAA also satisfies AABB (differing letters unconstrained).
  CHECK(matches_scheme(lenient, {"chill", "ill", "hill", "still"}, "AABB"));
  RhymeOptions opts;
  opts.strict_scheme = true;
  RhymeJudge strict(fixtures::dict(), opts);
  CHECK(matches_scheme(strict, {"chill", "ill", "play", "way"}, "AABB"));
  CHECK(!matches_scheme(strict, {"chill", "ill", "hill", "still"}, "AABB"));
  CHECK_THROWS_AS(matches_scheme(lenient, {"a", "b"}, "AABB"), std::invalid_argument);
}

TEST_CASE("end word skips trailing non-alphabetic tokens") {
  CHECK(end_word({"the", "snow", "falls", "."}) == "falls");
  CHECK(end_word({"snow", ",", "--"}) == "snow");
  CHECK_THROWS_AS(end_word({",", "..."}), std::invalid_argument);
}

TEST_CASE("label_scheme agrees with the partition oracle on random tuples") {
  RhymeJudge judge(fixtures::dict());
  auto words = fixtures::dict().words();
  Rng rng(21);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> tuple;
    for (int i = 0; i < 4; ++i) tuple.push_back(words[rng.index(words.size())]);
    auto oracle = oracle_scheme(judge, tuple);
    REQUIRE(oracle.has_value());
    CHECK(label_scheme(judge, tuple) == *oracle);
    ++checked;
  }
  CHECK(checked == 500);
}
