#pragma once

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "grn/params.hpp"

namespace grn {

// Clips gradients of all parameters jointly to a global L2 norm. Returns the
// pre-clip norm.
inline real clip_grad_norm(ParamSet& params, real max_norm) {
  real sq = 0;
  for (const auto& p : params.items())
    for (real g : p->grad) sq += g * g;
  real norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    real scale = max_norm / norm;
    for (const auto& p : params.items())
      for (real& g : p->grad) g *= scale;
  }
  return norm;
}

// Bias-corrected Adam. Descent on the loss; policy-gradient callers negate
// their objective to get ascent.
class Adam {
 public:
  real lr = 1e-3;
  real beta1 = 0.9;
  real beta2 = 0.999;
  real eps = 1e-8;

  explicit Adam(real lr_ = 1e-3) : lr(lr_) {}

  long step_count() const { return t_; }

  void step(ParamSet& params) {
    for (const auto& p : params.items())
      for (real g : p->grad)
        if (!std::isfinite(g))
          throw std::runtime_error("Adam: non-finite gradient in parameter " +
                                   p->name);
    ++t_;
    real bc1 = real(1) - std::pow(beta1, static_cast<real>(t_));
    real bc2 = real(1) - std::pow(beta2, static_cast<real>(t_));
    for (const auto& p : params.items()) {
      auto& mv = moments_[p.get()];
      if (mv.m.empty()) {
        mv.m.assign(p->data.size(), real(0));
        mv.v.assign(p->data.size(), real(0));
      }
      for (std::size_t i = 0; i < p->data.size(); ++i) {
        real g = p->grad[i];
        mv.m[i] = beta1 * mv.m[i] + (real(1) - beta1) * g;
        mv.v[i] = beta2 * mv.v[i] + (real(1) - beta2) * g * g;
        real mhat = mv.m[i] / bc1;
        real vhat = mv.v[i] / bc2;
        p->data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

 private:
  struct Moments {
    std::vector<real> m, v;
  };
  long t_ = 0;
  std::unordered_map<Tensor*, Moments> moments_;
};

// Common supervised-training knobs shared by the generator and prompter.
struct TrainOptions {
  int epochs = 10;
  int batch_size = 8;
  real lr = 1e-3;
  real clip_norm = 5.0;
  int patience = 3;  // early stop on validation plateau
  std::uint64_t shuffle_seed = 1;
};

}  // namespace grn
