#include "vlut/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vlut {

AdamW::AdamW(ParamRegistry& reg, double weight_decay, double beta1, double beta2, double eps)
    : reg_(&reg), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(reg.size());
  v_.reserve(reg.size());
  for (const auto& p : reg.items()) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& items = reg_->items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    Parameter& p = *items[i];
    const Mat& g = p.grad;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    const Mat mhat = m_[i] / bc1;
    const Mat vhat = v_[i] / bc2;
    p.value -= lr * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
    p.value -= lr * wd_ * p.value;
  }
}

void AdamW::restore(std::uint64_t step_count, std::vector<Mat> m, std::vector<Mat> v) {
  const auto& items = reg_->items();
  if (m.size() != items.size() || v.size() != items.size())
    throw std::runtime_error("optimizer restore: moment count does not match the registry");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Mat& value = items[i]->value;
    if (m[i].rows() != value.rows() || m[i].cols() != value.cols() ||
        v[i].rows() != value.rows() || v[i].cols() != value.cols())
      throw std::runtime_error("optimizer restore: moment shape mismatch for '" +
                               items[i]->name + "'");
  }
  t_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

double clip_global_norm(ParamRegistry& reg, double max_norm) {
  const double norm = reg.grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : reg.items()) p->grad *= s;
  }
  return norm;
}

double cosine_lr(double base_lr, std::uint64_t step, std::uint64_t total_steps) {
  if (total_steps == 0) return base_lr;
  if (step >= total_steps) return 0.0;
  const double x = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * x));
}

}  // namespace vlut
