#pragma once

#include <cstdint>
#include <vector>

#include "vlut/domain.hpp"
#include "vlut/params.hpp"

namespace vlut {

// Adaptive-moment optimizer with decoupled weight decay. Moments live here,
// aligned with registry order; step(lr) consumes whatever gradients have been
// accumulated on the parameters since the last zero_grads().
class AdamW {
 public:
  AdamW(ParamRegistry& reg, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);

  // One update with the given learning rate. lr = 0 leaves every parameter
  // untouched (decay is scaled by lr too) but still advances the moments.
  void step(double lr);

  std::uint64_t step_count() const { return t_; }
  const std::vector<Mat>& moment_m() const { return m_; }
  const std::vector<Mat>& moment_v() const { return v_; }

  // Restores moments saved in a checkpoint; shapes must match the registry.
  void restore(std::uint64_t step_count, std::vector<Mat> m, std::vector<Mat> v);

 private:
  ParamRegistry* reg_;
  double wd_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
};

// Scales all gradients down so their global l2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_global_norm(ParamRegistry& reg, double max_norm);

// Cosine decay from base_lr at step 0 toward 0 at total_steps; no warmup.
double cosine_lr(double base_lr, std::uint64_t step, std::uint64_t total_steps);

}  // namespace vlut
