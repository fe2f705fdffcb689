#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "grn/sampling.hpp"

using namespace grn;

namespace {

std::map<int, int> draw_histogram(const std::vector<real>& probs,
                                  const SamplingStrategy& s, int n, Rng& rng) {
  std::map<int, int> hist;
  for (int i = 0; i < n; ++i) ++hist[sample_token(probs, s, rng)];
  return hist;
}

}  // namespace

TEST_CASE("multinomial frequencies match probabilities within 1%") {
  Rng rng(11);
  std::vector<real> probs = {0.5, 0.3, 0.15, 0.05};
  const int N = 100000;
  auto hist = draw_histogram(probs, SamplingStrategy::multinomial(), N, rng);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(static_cast<real>(hist[i]) / N - probs[i]) < 0.01);
}

TEST_CASE("top-k support is exactly the k most probable ids") {
  Rng rng(12);
  std::vector<real> probs = {0.05, 0.4, 0.1, 0.3, 0.15};
  auto hist = draw_histogram(probs, SamplingStrategy::top_k(3), 20000, rng);
  std::set<int> support;
  for (auto [id, cnt] : hist) support.insert(id);
  CHECK(support == std::set<int>{1, 3, 4});
  // Renormalized frequencies: 0.4/0.85, 0.3/0.85, 0.15/0.85.
  const real Z = 0.85;
  CHECK(std::abs(hist[1] / 20000.0 - 0.4 / Z) < 0.02);
  CHECK(std::abs(hist[3] / 20000.0 - 0.3 / Z) < 0.02);
  CHECK(std::abs(hist[4] / 20000.0 - 0.15 / Z) < 0.02);
}

TEST_CASE("top-1 is deterministic argmax") {
  Rng rng(13);
  std::vector<real> probs = {0.2, 0.1, 0.6, 0.1};
  for (int i = 0; i < 50; ++i)
    CHECK(sample_token(probs, SamplingStrategy::top_k(1), rng) == 2);
}

TEST_CASE("top-k with k >= n degrades to multinomial support") {
  Rng rng(14);
  std::vector<real> probs = {0.6, 0.4};
  auto hist = draw_histogram(probs, SamplingStrategy::top_k(10), 50000, rng);
  CHECK(std::abs(hist[0] / 50000.0 - 0.6) < 0.01);
  CHECK(std::abs(hist[1] / 50000.0 - 0.4) < 0.01);
}

TEST_CASE("nucleus support is the smallest prefix reaching mass p") {
  Rng rng(15);
  // Sorted: 0.5, 0.25, 0.15, 0.1; p=0.7 -> {0.5, 0.25} i.e. ids {2, 0}.
  std::vector<real> probs = {0.25, 0.1, 0.5, 0.15};
  auto hist = draw_histogram(probs, SamplingStrategy::nucleus(0.7), 100000, rng);
  std::set<int> support;
  for (auto [id, cnt] : hist) support.insert(id);
  CHECK(support == std::set<int>{0, 2});
  // Renormalized: 0.5/0.75 and 0.25/0.75.
  CHECK(std::abs(hist[2] / 100000.0 - 0.5 / 0.75) < 0.01);
  CHECK(std::abs(hist[0] / 100000.0 - 0.25 / 0.75) < 0.01);
}

TEST_CASE("nucleus p=1 keeps the full distribution") {
  Rng rng(16);
  std::vector<real> probs = {0.7, 0.2, 0.1};
  auto hist = draw_histogram(probs, SamplingStrategy::nucleus(1.0), 100000, rng);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(hist[i] / 100000.0 - probs[i]) < 0.01);
}

TEST_CASE("tiny nucleus p collapses to argmax") {
  Rng rng(17);
  std::vector<real> probs = {0.1, 0.8, 0.1};
  for (int i = 0; i < 50; ++i)
    CHECK(sample_token(probs, SamplingStrategy::nucleus(0.05), rng) == 1);
}

TEST_CASE("invalid strategy parameters are rejected") {
  CHECK_THROWS_AS(SamplingStrategy::top_k(0), std::invalid_argument);
  CHECK_THROWS_AS(SamplingStrategy::nucleus(0.0), std::invalid_argument);
  CHECK_THROWS_AS(SamplingStrategy::nucleus(1.5), std::invalid_argument);
  Rng rng(18);
  std::vector<real> probs = {0.5, 0.5};
  CHECK_THROWS_AS(sample_top_k(probs, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_nucleus(probs, -0.1, rng), std::invalid_argument);
}

TEST_CASE("sampling is reproducible under the same seed") {
  std::vector<real> probs = {0.3, 0.3, 0.2, 0.2};
  SamplingStrategy s = SamplingStrategy::nucleus(0.9);
  Rng a(99), b(99);
  for (int i = 0; i < 200; ++i)
    CHECK(sample_token(probs, s, a) == sample_token(probs, s, b));
}
