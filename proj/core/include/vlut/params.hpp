#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vlut/autodiff.hpp"

namespace vlut {

// Owns every trainable parameter of a model. unique_ptr storage keeps
// Parameter addresses stable, so Tape leaves can hold plain pointers across
// registry growth. Insertion order is the canonical checkpoint order.
class ParamRegistry {
 public:
  Parameter& add(std::string name, Mat value) {
    if (find(name) != nullptr)
      throw std::invalid_argument("ParamRegistry: duplicate parameter '" + name + "'");
    params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value)));
    return *params_.back();
  }

  Parameter* find(std::string_view name) {
    for (auto& p : params_)
      if (p->name == name) return p.get();
    return nullptr;
  }
  const Parameter* find(std::string_view name) const {
    for (const auto& p : params_)
      if (p->name == name) return p.get();
    return nullptr;
  }

  Parameter& at(std::string_view name) {
    Parameter* p = find(name);
    if (!p) throw std::invalid_argument("ParamRegistry: unknown parameter '" + std::string(name) + "'");
    return *p;
  }

  void zero_grads() {
    for (auto& p : params_) p->zero_grad();
  }

  double grad_norm() const {
    double sq = 0.0;
    for (const auto& p : params_) sq += p->grad.squaredNorm();
    return std::sqrt(sq);
  }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  const std::vector<std::unique_ptr<Parameter>>& items() const { return params_; }
  std::vector<std::unique_ptr<Parameter>>& items() { return params_; }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace vlut
