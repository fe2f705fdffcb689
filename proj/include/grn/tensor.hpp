#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "grn/rng.hpp"

namespace grn {

class Tensor;
using Value = std::shared_ptr<Tensor>;

// Thread-local switch: when grad is disabled, ops do not record parents or
// backprop closures, so forward passes build no graph.
inline bool& grad_enabled_flag() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  NoGradGuard() : prev_(grad_enabled_flag()) { grad_enabled_flag() = false; }
  ~NoGradGuard() { grad_enabled_flag() = prev_; }
  bool prev_;
};

// Dense row-major tensor node of a dynamically built reverse-mode graph.
class Tensor {
 public:
  std::vector<int> shape;
  std::vector<real> data;
  std::vector<real> grad;  // same length as data when requires_grad
  bool requires_grad = false;
  std::string name;

  std::vector<Value> parents;
  std::function<void()> backprop;

  int size() const {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }
  bool is_scalar() const { return size() == 1; }

  real& at(int i) { return data[i]; }
  real scalar() const {
    if (!is_scalar()) throw std::invalid_argument("Tensor::scalar on non-scalar");
    return data[0];
  }

  void zero_grad() { std::fill(grad.begin(), grad.end(), real(0)); }
};

inline std::string shape_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

[[noreturn]] inline void shape_error(const std::string& op, const Value& a,
                                     const Value& b = nullptr) {
  std::string msg = op + ": incompatible shapes " + shape_str(a->shape);
  if (b) msg += " and " + shape_str(b->shape);
  throw std::invalid_argument(msg);
}

inline Value make_tensor(std::vector<int> shape, bool requires_grad = false) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(t->size(), real(0));
  t->requires_grad = requires_grad;
  if (requires_grad) t->grad.assign(t->size(), real(0));
  return t;
}

inline Value constant(std::vector<int> shape, const std::vector<real>& values) {
  auto t = make_tensor(std::move(shape));
  if (static_cast<int>(values.size()) != t->size())
    throw std::invalid_argument("constant: data length does not match shape");
  t->data = values;
  return t;
}

inline Value scalar_const(real v) { return constant({1}, {v}); }

// Marks the result of an op: decides whether the node joins the graph.
inline void attach(const Value& out, std::vector<Value> parents,
                   std::function<void()> backprop) {
  bool need = false;
  if (grad_enabled_flag())
    for (const auto& p : parents)
      if (p->requires_grad) need = true;
  if (need) {
    out->requires_grad = true;
    out->grad.assign(out->size(), real(0));
    out->parents = std::move(parents);
    out->backprop = std::move(backprop);
  }
}

// ---------------------------------------------------------------------------
// Elementary ops
// ---------------------------------------------------------------------------

inline Value add(const Value& a, const Value& b) {
  if (a->shape != b->shape) shape_error("add", a, b);
  auto out = make_tensor(a->shape);
  for (int i = 0; i < out->size(); ++i) out->data[i] = a->data[i] + b->data[i];
  attach(out, {a, b}, [a, b, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i];
    if (b->requires_grad)
      for (int i = 0; i < o->size(); ++i) b->grad[i] += o->grad[i];
  });
  return out;
}

inline Value sub(const Value& a, const Value& b) {
  if (a->shape != b->shape) shape_error("sub", a, b);
  auto out = make_tensor(a->shape);
  for (int i = 0; i < out->size(); ++i) out->data[i] = a->data[i] - b->data[i];
  attach(out, {a, b}, [a, b, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i];
    if (b->requires_grad)
      for (int i = 0; i < o->size(); ++i) b->grad[i] -= o->grad[i];
  });
  return out;
}

inline Value mul(const Value& a, const Value& b) {
  if (a->shape != b->shape) shape_error("mul", a, b);
  auto out = make_tensor(a->shape);
  for (int i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * b->data[i];
  attach(out, {a, b}, [a, b, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i] * b->data[i];
    if (b->requires_grad)
      for (int i = 0; i < o->size(); ++i) b->grad[i] += o->grad[i] * a->data[i];
  });
  return out;
}

inline Value scalar_mul(const Value& a, real c) {
  auto out = make_tensor(a->shape);
  for (int i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * c;
  attach(out, {a}, [a, c, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i] * c;
  });
  return out;
}

// {m,k}x{k,n} -> {m,n}, or {m,k}x{k} -> {m}.
inline Value matmul(const Value& a, const Value& b) {
  if (a->rank() != 2) shape_error("matmul", a, b);
  int m = a->rows(), k = a->cols();
  if (b->rank() == 1) {
    if (b->shape[0] != k) shape_error("matmul", a, b);
    auto out = make_tensor({m});
    for (int i = 0; i < m; ++i) {
      real acc = 0;
      const real* arow = a->data.data() + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) acc += arow[j] * b->data[j];
      out->data[i] = acc;
    }
    attach(out, {a, b}, [a, b, m, k, o = out.get()] {
      if (a->requires_grad)
        for (int i = 0; i < m; ++i) {
          real g = o->grad[i];
          real* arow = a->grad.data() + static_cast<std::size_t>(i) * k;
          for (int j = 0; j < k; ++j) arow[j] += g * b->data[j];
        }
      if (b->requires_grad)
        for (int i = 0; i < m; ++i) {
          real g = o->grad[i];
          const real* arow = a->data.data() + static_cast<std::size_t>(i) * k;
          for (int j = 0; j < k; ++j) b->grad[j] += g * arow[j];
        }
    });
    return out;
  }
  if (b->rank() != 2 || b->rows() != k) shape_error("matmul", a, b);
  int n = b->cols();
  auto out = make_tensor({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      real av = a->data[static_cast<std::size_t>(i) * k + p];
      const real* brow = b->data.data() + static_cast<std::size_t>(p) * n;
      real* orow = out->data.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  attach(out, {a, b}, [a, b, m, k, n, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          real acc = 0;
          const real* brow = b->data.data() + static_cast<std::size_t>(p) * n;
          const real* grow = o->grad.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
          a->grad[static_cast<std::size_t>(i) * k + p] += acc;
        }
    if (b->requires_grad)
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          real av = a->data[static_cast<std::size_t>(i) * k + p];
          real* brow = b->grad.data() + static_cast<std::size_t>(p) * n;
          const real* grow = o->grad.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
        }
  });
  return out;
}

inline Value concat(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: empty input list");
  int total = 0;
  for (const auto& p : parts) {
    if (p->rank() != 1) shape_error("concat", p);
    total += p->size();
  }
  auto out = make_tensor({total});
  int off = 0;
  for (const auto& p : parts) {
    std::copy(p->data.begin(), p->data.end(), out->data.begin() + off);
    off += p->size();
  }
  attach(out, parts, [parts, o = out.get()] {
    int off = 0;
    for (const auto& p : parts) {
      if (p->requires_grad)
        for (int i = 0; i < p->size(); ++i) p->grad[i] += o->grad[off + i];
      off += p->size();
    }
  });
  return out;
}

inline Value slice(const Value& a, int start, int len) {
  if (a->rank() != 1 || start < 0 || len < 0 || start + len > a->size())
    throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") out of " +
                                shape_str(a->shape));
  auto out = make_tensor({len});
  std::copy(a->data.begin() + start, a->data.begin() + start + len, out->data.begin());
  attach(out, {a}, [a, start, len, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < len; ++i) a->grad[start + i] += o->grad[i];
  });
  return out;
}

inline Value tanh_v(const Value& a) {
  auto out = make_tensor(a->shape);
  for (int i = 0; i < out->size(); ++i) out->data[i] = std::tanh(a->data[i]);
  attach(out, {a}, [a, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < o->size(); ++i)
        a->grad[i] += o->grad[i] * (real(1) - o->data[i] * o->data[i]);
  });
  return out;
}

inline Value sigmoid_v(const Value& a) {
  auto out = make_tensor(a->shape);
  for (int i = 0; i < out->size(); ++i)
    out->data[i] = real(1) / (real(1) + std::exp(-a->data[i]));
  attach(out, {a}, [a, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < o->size(); ++i)
        a->grad[i] += o->grad[i] * o->data[i] * (real(1) - o->data[i]);
  });
  return out;
}

inline Value relu_v(const Value& a) {
  auto out = make_tensor(a->shape);
  for (int i = 0; i < out->size(); ++i) out->data[i] = std::max(real(0), a->data[i]);
  attach(out, {a}, [a, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < o->size(); ++i)
        if (a->data[i] > 0) a->grad[i] += o->grad[i];
  });
  return out;
}

inline Value exp_v(const Value& a) {
  auto out = make_tensor(a->shape);
  for (int i = 0; i < out->size(); ++i) out->data[i] = std::exp(a->data[i]);
  attach(out, {a}, [a, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i] * o->data[i];
  });
  return out;
}

inline Value softmax(const Value& a) {
  if (a->rank() != 1) shape_error("softmax", a);
  auto out = make_tensor(a->shape);
  real mx = *std::max_element(a->data.begin(), a->data.end());
  real z = 0;
  for (int i = 0; i < a->size(); ++i) z += (out->data[i] = std::exp(a->data[i] - mx));
  for (int i = 0; i < a->size(); ++i) out->data[i] /= z;
  attach(out, {a}, [a, o = out.get()] {
    if (!a->requires_grad) return;
    real dot = 0;
    for (int i = 0; i < o->size(); ++i) dot += o->grad[i] * o->data[i];
    for (int i = 0; i < o->size(); ++i)
      a->grad[i] += o->data[i] * (o->grad[i] - dot);
  });
  return out;
}

inline Value log_softmax(const Value& a) {
  if (a->rank() != 1) shape_error("log_softmax", a);
  auto out = make_tensor(a->shape);
  real mx = *std::max_element(a->data.begin(), a->data.end());
  real z = 0;
  for (int i = 0; i < a->size(); ++i) z += std::exp(a->data[i] - mx);
  real lz = std::log(z) + mx;
  for (int i = 0; i < a->size(); ++i) out->data[i] = a->data[i] - lz;
  attach(out, {a}, [a, o = out.get()] {
    if (!a->requires_grad) return;
    real gsum = 0;
    for (int i = 0; i < o->size(); ++i) gsum += o->grad[i];
    for (int i = 0; i < o->size(); ++i)
      a->grad[i] += o->grad[i] - std::exp(o->data[i]) * gsum;
  });
  return out;
}

// Log-softmax restricted to positions where mask is true. Masked outputs are
// set to kMaskedLogProb and never carry gradient.
inline constexpr real kMaskedLogProb = real(-1e30);

inline Value masked_log_softmax(const Value& a, const std::vector<bool>& mask) {
  if (a->rank() != 1 || static_cast<std::size_t>(a->size()) != mask.size())
    shape_error("masked_log_softmax", a);
  auto out = make_tensor(a->shape);
  real mx = -std::numeric_limits<real>::infinity();
  bool any = false;
  for (int i = 0; i < a->size(); ++i)
    if (mask[i]) { mx = std::max(mx, a->data[i]); any = true; }
  if (!any) throw std::invalid_argument("masked_log_softmax: empty mask");
  real z = 0;
  for (int i = 0; i < a->size(); ++i)
    if (mask[i]) z += std::exp(a->data[i] - mx);
  real lz = std::log(z) + mx;
  for (int i = 0; i < a->size(); ++i)
    out->data[i] = mask[i] ? a->data[i] - lz : kMaskedLogProb;
  attach(out, {a}, [a, mask, o = out.get()] {
    if (!a->requires_grad) return;
    real gsum = 0;
    for (int i = 0; i < o->size(); ++i)
      if (mask[i]) gsum += o->grad[i];
    for (int i = 0; i < o->size(); ++i)
      if (mask[i]) a->grad[i] += o->grad[i] - std::exp(o->data[i]) * gsum;
  });
  return out;
}

// Row lookup in an embedding matrix, gradient scatter-added into that row.
inline Value embedding_lookup(const Value& table, int row) {
  if (table->rank() != 2) shape_error("embedding_lookup", table);
  if (row < 0 || row >= table->rows())
    throw std::invalid_argument("embedding_lookup: row " + std::to_string(row) +
                                " out of " + shape_str(table->shape));
  int d = table->cols();
  auto out = make_tensor({d});
  std::copy(table->data.begin() + static_cast<std::size_t>(row) * d,
            table->data.begin() + static_cast<std::size_t>(row + 1) * d,
            out->data.begin());
  attach(out, {table}, [table, row, d, o = out.get()] {
    if (table->requires_grad)
      for (int i = 0; i < d; ++i)
        table->grad[static_cast<std::size_t>(row) * d + i] += o->grad[i];
  });
  return out;
}

inline Value pick(const Value& a, int idx) {
  if (idx < 0 || idx >= a->size())
    throw std::invalid_argument("pick: index out of range");
  auto out = make_tensor({1});
  out->data[0] = a->data[idx];
  attach(out, {a}, [a, idx, o = out.get()] {
    if (a->requires_grad) a->grad[idx] += o->grad[0];
  });
  return out;
}

inline Value sum(const Value& a) {
  auto out = make_tensor({1});
  real acc = 0;
  for (real v : a->data) acc += v;
  out->data[0] = acc;
  attach(out, {a}, [a, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < a->size(); ++i) a->grad[i] += o->grad[0];
  });
  return out;
}

inline Value mean(const Value& a) {
  int n = a->size();
  auto out = make_tensor({1});
  real acc = 0;
  for (real v : a->data) acc += v;
  out->data[0] = acc / n;
  attach(out, {a}, [a, n, o = out.get()] {
    if (a->requires_grad)
      for (int i = 0; i < n; ++i) a->grad[i] += o->grad[0] / n;
  });
  return out;
}

inline Value neg(const Value& a) { return scalar_mul(a, real(-1)); }

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

// Reverse-topological sweep from a scalar loss. Each node is visited exactly
// once; parameters not reachable from the loss keep their (zero) gradient.
inline void backward(const Value& loss) {
  if (!loss->is_scalar())
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                shape_str(loss->shape));
  if (!loss->requires_grad) return;

  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> seen;
  std::vector<std::pair<Tensor*, std::size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Tensor* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss->grad[0] += real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop();
}

}  // namespace grn
