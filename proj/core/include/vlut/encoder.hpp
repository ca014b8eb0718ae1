#pragma once

#include <array>

#include "vlut/autodiff.hpp"
#include "vlut/domain.hpp"
#include "vlut/params.hpp"
#include "vlut/rng.hpp"

namespace vlut {

enum class TokenRole { kTemplate, kSearch };

struct TokenSegment {
  ViewId view;
  TokenRole role;
  int start = 0;
  int length = 0;
};

// Fixed joint-sequence layout: (u-template, u-search, g-template, g-search).
struct TokenLayout {
  std::array<TokenSegment, 4> segments;
  int per_view = 0;
  int total = 0;

  static TokenLayout from_config(const TrackerConfig& cfg);
  const TokenSegment& segment(ViewId v, TokenRole role) const;
};

Mat normal_init(Rng& rng, int rows, int cols, double stddev);

struct AttentionWeights {
  Parameter* wq = nullptr;
  Parameter* bq = nullptr;
  Parameter* wk = nullptr;
  Parameter* bk = nullptr;
  Parameter* wv = nullptr;
  Parameter* bv = nullptr;
  Parameter* wo = nullptr;
  Parameter* bo = nullptr;

  static AttentionWeights create(ParamRegistry& reg, const std::string& prefix, int dim,
                                 Rng& rng);
};

struct LayerNormWeights {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  static LayerNormWeights create(ParamRegistry& reg, const std::string& prefix, int dim);
};

struct FeedForwardWeights {
  Parameter* w1 = nullptr;
  Parameter* b1 = nullptr;
  Parameter* w2 = nullptr;
  Parameter* b2 = nullptr;

  static FeedForwardWeights create(ParamRegistry& reg, const std::string& prefix, int dim,
                                   int hidden, Rng& rng);
};

// Scaled dot-product attention with row queries and shared K/V source.
// q_in: [Nq, D], kv_in: [Nkv, D]; output [Nq, D]. Self-attention when both
// arguments are the same Var.
Var multi_head_attention(Tape& t, Var q_in, Var kv_in, const AttentionWeights& w, int heads);

Var feed_forward(Tape& t, Var x, const FeedForwardWeights& w);

Var apply_layer_norm(Tape& t, Var x, const LayerNormWeights& w);

struct EncoderLayerWeights {
  LayerNormWeights ln1;
  AttentionWeights attn;
  LayerNormWeights ln2;
  FeedForwardWeights ffn;
};

// Shared dual-view backbone: patch embedding, one positional table reused by
// both views, and a stack of pre-norm blocks attending densely across every
// token of both views. No class token, no output norm, so depth 0 is the
// identity.
class Encoder {
 public:
  Encoder(ParamRegistry& reg, const TrackerConfig& cfg, Rng& rng);

  Var patch_embed(Tape& t, const ImageTensor& img) const;
  Var view_sequence(Tape& t, const ImageTensor& tmpl, const ImageTensor& search) const;
  Var joint_forward(Tape& t, Var joint) const;
  static Var slice_view(Tape& t, Var joint, const TokenLayout& layout, ViewId v, TokenRole role);

  const TokenLayout& layout() const { return layout_; }
  int depth() const { return static_cast<int>(layers_.size()); }

 private:
  TrackerConfig cfg_;
  TokenLayout layout_;
  Parameter* patch_proj_ = nullptr;
  Parameter* patch_bias_ = nullptr;
  Parameter* pos_table_ = nullptr;
  std::vector<EncoderLayerWeights> layers_;
};

}  // namespace vlut
