#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "grn/rng.hpp"

namespace grn {

enum class SamplingKind { Multinomial, TopK, Nucleus };

struct SamplingStrategy {
  SamplingKind kind = SamplingKind::Nucleus;
  int k = 50;       // TopK
  real p = 0.9;     // Nucleus

  static SamplingStrategy multinomial() { return {SamplingKind::Multinomial, 0, 0}; }
  static SamplingStrategy top_k(int k) {
    if (k < 1) throw std::invalid_argument("top_k: k must be >= 1");
    return {SamplingKind::TopK, k, 0};
  }
  static SamplingStrategy nucleus(real p) {
    if (!(p > 0 && p <= 1)) throw std::invalid_argument("nucleus: p must be in (0,1]");
    return {SamplingKind::Nucleus, 0, p};
  }
};

inline int sample_multinomial(const std::vector<real>& probs, Rng& rng) {
  return static_cast<int>(rng.categorical(probs));
}

// Support = the k largest-probability ids, renormalized. k=1 is argmax.
inline int sample_top_k(const std::vector<real>& probs, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_top_k: k must be >= 1");
  int n = static_cast<int>(probs.size());
  k = std::min(k, n);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](int a, int b) { return probs[a] > probs[b]; });
  if (k == 1) return idx[0];
  std::vector<real> w(k);
  for (int i = 0; i < k; ++i) w[i] = probs[idx[i]];
  return idx[rng.categorical(w)];
}

// Support = the smallest probability-sorted prefix with cumulative mass >= p.
inline int sample_nucleus(const std::vector<real>& probs, real p, Rng& rng) {
  if (!(p > 0 && p <= 1))
    throw std::invalid_argument("sample_nucleus: p must be in (0,1]");
  int n = static_cast<int>(probs.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return probs[a] > probs[b]; });
  real cum = 0;
  int cut = 0;
  while (cut < n) {
    cum += probs[idx[cut]];
    ++cut;
    if (cum >= p) break;
  }
  std::vector<real> w(cut);
  for (int i = 0; i < cut; ++i) w[i] = probs[idx[i]];
  return idx[rng.categorical(w)];
}

inline int sample_token(const std::vector<real>& probs, const SamplingStrategy& s, Rng& rng) {
  switch (s.kind) {
    case SamplingKind::Multinomial: return sample_multinomial(probs, rng);
    case SamplingKind::TopK: return sample_top_k(probs, s.k, rng);
    case SamplingKind::Nucleus: return sample_nucleus(probs, s.p, rng);
  }
  throw std::logic_error("sample_token: unknown strategy");
}

}  // namespace grn
