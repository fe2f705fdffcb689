#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "grn/tensor.hpp"

namespace grn {

// Named, ordered collection of trainable tensors. Ordering is insertion
// order, which keeps optimizer sweeps and checkpoints deterministic.
class ParamSet {
 public:
  Value add(const std::string& name, std::vector<int> shape) {
    if (index_.count(name))
      throw std::invalid_argument("ParamSet: duplicate parameter " + name);
    auto t = make_tensor(std::move(shape), /*requires_grad=*/true);
    t->name = name;
    index_[name] = items_.size();
    items_.push_back(t);
    return t;
  }

  Value get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::invalid_argument("ParamSet: unknown parameter " + name);
    return items_[it->second];
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<Value>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  void zero_grad() {
    for (auto& p : items_) p->zero_grad();
  }

  // Adopt all parameters of another set (used for encoder sharing).
  void adopt(const ParamSet& other) {
    for (const auto& p : other.items()) {
      if (index_.count(p->name)) continue;
      index_[p->name] = items_.size();
      items_.push_back(p);
    }
  }

 private:
  std::vector<Value> items_;
  std::map<std::string, std::size_t> index_;
};

// Weight matrices: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); fan_in = cols.
inline void init_matrix(const Value& w, Rng& rng) {
  real bound = real(1) / std::sqrt(static_cast<real>(w->cols()));
  for (auto& v : w->data) v = rng.uniform(-bound, bound);
}

inline void init_embedding(const Value& e, Rng& rng) {
  for (auto& v : e->data) v = rng.normal(0.0, 0.1);
}

inline void init_vector_uniform(const Value& w, Rng& rng, real bound) {
  for (auto& v : w->data) v = rng.uniform(-bound, bound);
}

}  // namespace grn
