#include "vlut/heads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vlut {

Heads::Heads(ParamRegistry& reg, const TrackerConfig& cfg, Rng& rng)
    : side_(cfg.score_map_side()), dim_(cfg.embed_dim) {
  for (ViewId v : kViews) {
    const std::string p = std::string("head.") + view_name(v);
    OneHead& h = head_[v];
    h.ln = LayerNormWeights::create(reg, p + ".ln", dim_);
    h.w1 = &reg.add(p + ".w1", normal_init(rng, dim_, dim_, 0.02));
    h.b1 = &reg.add(p + ".b1", Mat::Zero(1, dim_));
    h.w2 = &reg.add(p + ".w2", normal_init(rng, dim_, 5, 0.02));
    h.b2 = &reg.add(p + ".b2", Mat::Zero(1, 5));
  }
}

HeadOutput Heads::forward(Tape& t, Var search_tokens, ViewId v) const {
  const Mat& x = t.value(search_tokens);
  const int n = static_cast<int>(x.rows());
  if (n != side_ * side_)
    throw std::invalid_argument("head_forward: token count is not the configured grid");
  if (x.cols() != dim_)
    throw std::invalid_argument("head_forward: token width does not match embed_dim");
  const OneHead& h = head_[v];
  Var hidden = t.gelu(t.add_row(t.matmul(apply_layer_norm(t, search_tokens, h.ln),
                                         t.param(*h.w1)),
                                t.param(*h.b1)));
  Var out5 = t.add_row(t.matmul(hidden, t.param(*h.w2)), t.param(*h.b2));
  HeadOutput res;
  res.logits = t.block(out5, 0, 0, n, 1);
  res.offsets = t.affine(t.sigmoid(t.block(out5, 0, 1, n, 2)), 1.0, -0.5);
  res.sizes = t.sigmoid(t.block(out5, 0, 3, n, 2));
  res.side = side_;
  return res;
}

ScoreMap to_score_map(const Mat& logits_col, int side) {
  if (logits_col.rows() != static_cast<Eigen::Index>(side) * side || logits_col.cols() != 1)
    throw std::invalid_argument("to_score_map: flat logits do not match grid");
  ScoreMap s(side, side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) s.logits(r, c) = logits_col(r * side + c, 0);
  return s;
}

int argmax_index(const Mat& logits_col) {
  int best = 0;
  double best_v = logits_col(0, 0);
  for (int i = 1; i < logits_col.rows(); ++i)
    if (logits_col(i, 0) > best_v) {
      best_v = logits_col(i, 0);
      best = i;
    }
  return best;
}

Box decode_box(const ScoreMap& score, const Mat& offsets, const Mat& sizes) {
  const int side = score.width;
  if (offsets.rows() != static_cast<Eigen::Index>(side) * side || offsets.cols() != 2 ||
      sizes.rows() != offsets.rows() || sizes.cols() != 2)
    throw std::invalid_argument("decode_box: map shapes disagree");
  // flatten row-major to reuse the documented tie-break
  Mat flat(side * side, 1);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) flat(r * side + c, 0) = score.logits(r, c);
  const int idx = argmax_index(flat);
  const int row = idx / side;
  const int col = idx % side;
  Box b;
  b.cx = std::clamp((col + 0.5 + offsets(idx, 0)) / side, 0.0, 1.0);
  b.cy = std::clamp((row + 0.5 + offsets(idx, 1)) / side, 0.0, 1.0);
  b.w = sizes(idx, 0);
  b.h = sizes(idx, 1);
  return b;
}

GraphBox decode_box_graph(Tape& t, const HeadOutput& out) {
  const int side = out.side;
  const int idx = argmax_index(t.value(out.logits));
  const int row = idx / side;
  const int col = idx % side;
  GraphBox b;
  b.peak_index = idx;
  const double inv = 1.0 / side;
  b.cx = t.affine(t.block(out.offsets, idx, 0, 1, 1), inv, (col + 0.5) * inv);
  b.cy = t.affine(t.block(out.offsets, idx, 1, 1, 1), inv, (row + 0.5) * inv);
  b.w = t.block(out.sizes, idx, 0, 1, 1);
  b.h = t.block(out.sizes, idx, 1, 1, 1);
  return b;
}

namespace {

int center_cell(double coord, int side) {
  return std::clamp(static_cast<int>(std::floor(coord * side)), 0, side - 1);
}

}  // namespace

Mat make_center_map(const Box& gt, int side) {
  const int pc = center_cell(gt.cx, side);
  const int pr = center_cell(gt.cy, side);
  Mat map(side, side);
  const double inv2s2 = 1.0 / 2.0;  // sigma = 1 cell
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const double d2 = static_cast<double>((r - pr) * (r - pr) + (c - pc) * (c - pc));
      map(r, c) = std::exp(-d2 * inv2s2);
    }
  map(pr, pc) = 1.0;
  return map;
}

BoxTargets encode_box_targets(const Box& gt, int side) {
  BoxTargets t;
  t.center_map = make_center_map(gt, side);
  const int n = side * side;
  t.offsets = Mat::Zero(n, 2);
  t.sizes = Mat::Zero(n, 2);
  const int pc = center_cell(gt.cx, side);
  const int pr = center_cell(gt.cy, side);
  const int idx = pr * side + pc;
  t.offsets(idx, 0) = gt.cx * side - (pc + 0.5);
  t.offsets(idx, 1) = gt.cy * side - (pr + 0.5);
  t.sizes(idx, 0) = gt.w;
  t.sizes(idx, 1) = gt.h;
  return t;
}

}  // namespace vlut
