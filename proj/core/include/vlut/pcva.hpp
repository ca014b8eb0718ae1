#pragma once

#include "vlut/autodiff.hpp"
#include "vlut/domain.hpp"
#include "vlut/encoder.hpp"
#include "vlut/params.hpp"
#include "vlut/rng.hpp"

namespace vlut {

// Prompt-guided cross-view adapter. Two symmetric, independently
// parameterized branches: each normalizes the full joint sequence shifted by
// its own global view token, then attends from its base features into the
// other view's base features prefixed with its prompt token, and applies a
// pre-norm feed-forward under a single outer residual.
class Pcva {
 public:
  Pcva(ParamRegistry& reg, const TrackerConfig& cfg, Rng& rng);

  // LayerNorm(joint + broadcast global token of view v); [N, D] -> [N, D].
  Var base_features(Tape& t, Var joint, ViewId v) const;

  // q_base + FFN(LN(MHCA(q_base, [prompt; kv_base]))) using branch weights
  // of `branch`. prompt: [1, D]. The promptless overload attends into the
  // bare kv_base (language guidance disabled).
  Var cross_view_attend(Tape& t, Var q_base, Var kv_base, Var prompt, ViewId branch) const;
  Var cross_view_attend(Tape& t, Var q_base, Var kv_base, ViewId branch) const;

  // Full adapter: returns per-view adapted features, layouts preserved.
  PerView<Var> forward(Tape& t, Var joint, Var prompt_uav, Var prompt_ground) const;
  PerView<Var> forward(Tape& t, Var joint) const;

 private:
  Var attend_impl(Tape& t, Var q_base, Var kv_base, const Var* prompt, ViewId branch) const;

  struct Branch {
    LayerNormWeights base_ln;
    AttentionWeights attn;
    LayerNormWeights ffn_ln;
    FeedForwardWeights ffn;
  };

  PerView<Branch> branch_;
  PerView<Parameter*> g_token_;
  int heads_ = 1;
  int dim_ = 0;
};

}  // namespace vlut
