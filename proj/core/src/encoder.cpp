#include "vlut/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vlut {

TokenLayout TokenLayout::from_config(const TrackerConfig& cfg) {
  const int nt = cfg.template_tokens();
  const int ns = cfg.search_tokens();
  TokenLayout layout;
  layout.per_view = nt + ns;
  layout.total = 2 * (nt + ns);
  layout.segments = {{{ViewId::kUav, TokenRole::kTemplate, 0, nt},
                      {ViewId::kUav, TokenRole::kSearch, nt, ns},
                      {ViewId::kGround, TokenRole::kTemplate, nt + ns, nt},
                      {ViewId::kGround, TokenRole::kSearch, nt + ns + nt, ns}}};
  return layout;
}

const TokenSegment& TokenLayout::segment(ViewId v, TokenRole role) const {
  for (const TokenSegment& s : segments)
    if (s.view == v && s.role == role) return s;
  throw std::invalid_argument("TokenLayout: unknown segment");
}

Mat normal_init(Rng& rng, int rows, int cols, double stddev) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, stddev);
  return m;
}

AttentionWeights AttentionWeights::create(ParamRegistry& reg, const std::string& prefix, int dim,
                                          Rng& rng) {
  AttentionWeights w;
  w.wq = &reg.add(prefix + ".wq", normal_init(rng, dim, dim, 0.02));
  w.bq = &reg.add(prefix + ".bq", Mat::Zero(1, dim));
  w.wk = &reg.add(prefix + ".wk", normal_init(rng, dim, dim, 0.02));
  w.bk = &reg.add(prefix + ".bk", Mat::Zero(1, dim));
  w.wv = &reg.add(prefix + ".wv", normal_init(rng, dim, dim, 0.02));
  w.bv = &reg.add(prefix + ".bv", Mat::Zero(1, dim));
  w.wo = &reg.add(prefix + ".wo", normal_init(rng, dim, dim, 0.02));
  w.bo = &reg.add(prefix + ".bo", Mat::Zero(1, dim));
  return w;
}

LayerNormWeights LayerNormWeights::create(ParamRegistry& reg, const std::string& prefix,
                                          int dim) {
  LayerNormWeights w;
  w.gain = &reg.add(prefix + ".gain", Mat::Ones(1, dim));
  w.bias = &reg.add(prefix + ".bias", Mat::Zero(1, dim));
  return w;
}

FeedForwardWeights FeedForwardWeights::create(ParamRegistry& reg, const std::string& prefix,
                                              int dim, int hidden, Rng& rng) {
  FeedForwardWeights w;
  w.w1 = &reg.add(prefix + ".w1", normal_init(rng, dim, hidden, 0.02));
  w.b1 = &reg.add(prefix + ".b1", Mat::Zero(1, hidden));
  w.w2 = &reg.add(prefix + ".w2", normal_init(rng, hidden, dim, 0.02));
  w.b2 = &reg.add(prefix + ".b2", Mat::Zero(1, dim));
  return w;
}

Var multi_head_attention(Tape& t, Var q_in, Var kv_in, const AttentionWeights& w, int heads) {
  const int dim = static_cast<int>(w.wq->value.rows());
  if (heads <= 0 || dim % heads != 0)
    throw std::invalid_argument("multi_head_attention: dim not divisible by heads");
  const int dh = dim / heads;
  const int nq = static_cast<int>(t.value(q_in).rows());
  const int nkv = static_cast<int>(t.value(kv_in).rows());

  Var q = t.add_row(t.matmul(q_in, t.param(*w.wq)), t.param(*w.bq));
  Var k = t.add_row(t.matmul(kv_in, t.param(*w.wk)), t.param(*w.bk));
  Var v = t.add_row(t.matmul(kv_in, t.param(*w.wv)), t.param(*w.bv));

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Var merged;
  for (int h = 0; h < heads; ++h) {
    Var qh = t.block(q, 0, h * dh, nq, dh);
    Var kh = t.block(k, 0, h * dh, nkv, dh);
    Var vh = t.block(v, 0, h * dh, nkv, dh);
    Var attn = t.row_softmax(t.affine(t.matmul_nt(qh, kh), scale, 0.0));
    Var oh = t.matmul(attn, vh);
    merged = h == 0 ? oh : t.concat_cols(merged, oh);
  }
  return t.add_row(t.matmul(merged, t.param(*w.wo)), t.param(*w.bo));
}

Var feed_forward(Tape& t, Var x, const FeedForwardWeights& w) {
  Var h = t.gelu(t.add_row(t.matmul(x, t.param(*w.w1)), t.param(*w.b1)));
  return t.add_row(t.matmul(h, t.param(*w.w2)), t.param(*w.b2));
}

Var apply_layer_norm(Tape& t, Var x, const LayerNormWeights& w) {
  return t.layer_norm(x, t.param(*w.gain), t.param(*w.bias));
}

Encoder::Encoder(ParamRegistry& reg, const TrackerConfig& cfg, Rng& rng)
    : cfg_(cfg), layout_(TokenLayout::from_config(cfg)) {
  const int d = cfg.embed_dim;
  const int patch_feat = cfg.patch_size * cfg.patch_size * 3;
  patch_proj_ = &reg.add("patch.proj", normal_init(rng, patch_feat, d, 0.02));
  patch_bias_ = &reg.add("patch.bias", Mat::Zero(1, d));
  pos_table_ = &reg.add("pos.table", normal_init(rng, layout_.per_view, d, 0.02));
  layers_.reserve(cfg.encoder_depth);
  for (int l = 0; l < cfg.encoder_depth; ++l) {
    const std::string p = "enc.L" + std::to_string(l);
    EncoderLayerWeights lw;
    lw.ln1 = LayerNormWeights::create(reg, p + ".ln1", d);
    lw.attn = AttentionWeights::create(reg, p + ".attn", d, rng);
    lw.ln2 = LayerNormWeights::create(reg, p + ".ln2", d);
    lw.ffn = FeedForwardWeights::create(reg, p + ".ffn", d, 4 * d, rng);
    layers_.push_back(lw);
  }
}

Var Encoder::patch_embed(Tape& t, const ImageTensor& img) const {
  const int p = cfg_.patch_size;
  if (img.height % p != 0 || img.width % p != 0)
    throw std::invalid_argument("patch_embed: image dimensions not divisible by patch_size");
  const int rows = img.height / p;
  const int cols = img.width / p;
  Mat patches(rows * cols, p * p * 3);
  for (int py = 0; py < rows; ++py)
    for (int px = 0; px < cols; ++px) {
      const int tok = py * cols + px;
      for (int c = 0; c < 3; ++c)
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx)
            patches(tok, c * p * p + dy * p + dx) = img.plane[c](py * p + dy, px * p + dx);
    }
  return t.add_row(t.matmul(t.constant(std::move(patches)), t.param(*patch_proj_)),
                   t.param(*patch_bias_));
}

Var Encoder::view_sequence(Tape& t, const ImageTensor& tmpl, const ImageTensor& search) const {
  if (tmpl.height != cfg_.template_size || tmpl.width != cfg_.template_size)
    throw std::invalid_argument("view_sequence: template image has wrong size");
  if (search.height != cfg_.search_size || search.width != cfg_.search_size)
    throw std::invalid_argument("view_sequence: search image has wrong size");
  Var tokens = t.concat_rows(patch_embed(t, tmpl), patch_embed(t, search));
  return t.add(tokens, t.param(*pos_table_));
}

Var Encoder::joint_forward(Tape& t, Var joint) const {
  const Mat& v = t.value(joint);
  if (v.rows() != layout_.total || v.cols() != cfg_.embed_dim)
    throw std::invalid_argument("joint_forward: joint sequence shape does not match layout");
  Var x = joint;
  for (const EncoderLayerWeights& lw : layers_) {
    Var normed = apply_layer_norm(t, x, lw.ln1);
    x = t.add(x, multi_head_attention(t, normed, normed, lw.attn, cfg_.attn_heads));
    x = t.add(x, feed_forward(t, apply_layer_norm(t, x, lw.ln2), lw.ffn));
  }
  return x;
}

Var Encoder::slice_view(Tape& t, Var joint, const TokenLayout& layout, ViewId v,
                        TokenRole role) {
  const TokenSegment& s = layout.segment(v, role);
  const int d = static_cast<int>(t.value(joint).cols());
  return t.block(joint, s.start, 0, s.length, d);
}

}  // namespace vlut
