#include "vlut/pcva.hpp"

#include <stdexcept>
#include <string>

namespace vlut {

Pcva::Pcva(ParamRegistry& reg, const TrackerConfig& cfg, Rng& rng)
    : heads_(cfg.attn_heads), dim_(cfg.embed_dim) {
  for (ViewId v : kViews) {
    const std::string p = std::string("pcva.") + view_name(v);
    g_token_[v] = &reg.add(p + ".g_token", normal_init(rng, 1, dim_, 0.02));
    Branch& b = branch_[v];
    b.base_ln = LayerNormWeights::create(reg, p + ".base_ln", dim_);
    b.attn = AttentionWeights::create(reg, p + ".attn", dim_, rng);
    b.ffn_ln = LayerNormWeights::create(reg, p + ".ffn_ln", dim_);
    b.ffn = FeedForwardWeights::create(reg, p + ".ffn", dim_, 4 * dim_, rng);
  }
}

Var Pcva::base_features(Tape& t, Var joint, ViewId v) const {
  if (t.value(joint).cols() != dim_)
    throw std::invalid_argument("base_features: feature width does not match embed_dim");
  Var shifted = t.add_row(joint, t.param(*g_token_[v]));
  return apply_layer_norm(t, shifted, branch_[v].base_ln);
}

Var Pcva::attend_impl(Tape& t, Var q_base, Var kv_base, const Var* prompt,
                      ViewId branch) const {
  const Branch& b = branch_[branch];
  Var kv = kv_base;
  if (prompt != nullptr) {
    const Mat& p = t.value(*prompt);
    if (p.rows() != 1 || p.cols() != dim_)
      throw std::invalid_argument("cross_view_attend: prompt must be [1, D]");
    kv = t.concat_rows(*prompt, kv_base);
  }
  Var attended = multi_head_attention(t, q_base, kv, b.attn, heads_);
  Var ffn_out = feed_forward(t, apply_layer_norm(t, attended, b.ffn_ln), b.ffn);
  return t.add(ffn_out, q_base);
}

Var Pcva::cross_view_attend(Tape& t, Var q_base, Var kv_base, Var prompt, ViewId branch) const {
  return attend_impl(t, q_base, kv_base, &prompt, branch);
}

Var Pcva::cross_view_attend(Tape& t, Var q_base, Var kv_base, ViewId branch) const {
  return attend_impl(t, q_base, kv_base, nullptr, branch);
}

PerView<Var> Pcva::forward(Tape& t, Var joint, Var prompt_uav, Var prompt_ground) const {
  Var base_u = base_features(t, joint, ViewId::kUav);
  Var base_g = base_features(t, joint, ViewId::kGround);
  PerView<Var> out;
  out.uav = cross_view_attend(t, base_u, base_g, prompt_uav, ViewId::kUav);
  out.ground = cross_view_attend(t, base_g, base_u, prompt_ground, ViewId::kGround);
  return out;
}

PerView<Var> Pcva::forward(Tape& t, Var joint) const {
  Var base_u = base_features(t, joint, ViewId::kUav);
  Var base_g = base_features(t, joint, ViewId::kGround);
  PerView<Var> out;
  out.uav = cross_view_attend(t, base_u, base_g, ViewId::kUav);
  out.ground = cross_view_attend(t, base_g, base_u, ViewId::kGround);
  return out;
}

}  // namespace vlut
