#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "grn/params.hpp"

namespace grn {

// Central finite-difference check of analytic gradients.
//
// `f` maps the current parameter values to a scalar (it must rebuild its
// forward graph on every call). Gradients are taken from the tensors'
// grad buffers after one backward pass, then compared coordinate-wise
// against (f(x+h) - f(x-h)) / 2h. Returns the max relative error
// |g_ad - g_fd| / max(1e-6, |g_ad| + |g_fd|) over all checked coordinates;
// the floor keeps finite-difference cancellation noise on near-zero
// gradients from dominating the metric.
inline real grad_check(const std::function<Value()>& f, ParamSet& params,
                       real h = 1e-5, int max_coords_per_param = 0) {
  if (h <= 0) throw std::invalid_argument("grad_check: h must be positive");

  params.zero_grad();
  Value loss = f();
  if (!std::isfinite(loss->scalar()))
    throw std::runtime_error("grad_check: non-finite function value");
  backward(loss);

  real worst = 0;
  for (const auto& p : params.items()) {
    int n = p->size();
    int step = 1;
    if (max_coords_per_param > 0 && n > max_coords_per_param)
      step = n / max_coords_per_param;
    for (int i = 0; i < n; i += step) {
      real saved = p->data[i];
      real fp, fm;
      {
        NoGradGuard ng;
        p->data[i] = saved + h;
        fp = f()->scalar();
        p->data[i] = saved - h;
        fm = f()->scalar();
        p->data[i] = saved;
      }
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("grad_check: non-finite function value");
      real g_fd = (fp - fm) / (2 * h);
      real g_ad = p->grad[i];
      real denom = std::max(real(1e-6), std::abs(g_ad) + std::abs(g_fd));
      worst = std::max(worst, std::abs(g_ad - g_fd) / denom);
    }
  }
  return worst;
}

}  // namespace grn
