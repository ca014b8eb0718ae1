#pragma once

#include "vlut/autodiff.hpp"
#include "vlut/domain.hpp"
#include "vlut/encoder.hpp"
#include "vlut/params.hpp"
#include "vlut/rng.hpp"

namespace vlut {

// Graph-side head outputs over the search grid; n = side*side tokens.
struct HeadOutput {
  Var logits;   // [n, 1] raw classification logits
  Var offsets;  // [n, 2] sub-cell center offsets in (-0.5, 0.5)
  Var sizes;    // [n, 2] normalized box extent in (0, 1)
  int side = 0;
};

// Box assembled from graph scalars at the predicted peak cell; the peak index
// itself is treated as a constant, so gradients flow through the gathered
// offset and size entries only. Center coordinates are left unclamped here;
// inference-time decoding clamps.
struct GraphBox {
  Var cx, cy, w, h;  // each [1, 1]
  int peak_index = 0;
};

// Two independent per-view heads, each a per-token stack
// LN -> Linear(D,D) -> GELU -> Linear(D,5): one class logit, two offset
// channels, two size channels.
class Heads {
 public:
  Heads(ParamRegistry& reg, const TrackerConfig& cfg, Rng& rng);
  HeadOutput forward(Tape& t, Var search_tokens, ViewId v) const;

 private:
  struct OneHead {
    LayerNormWeights ln;
    Parameter* w1 = nullptr;
    Parameter* b1 = nullptr;
    Parameter* w2 = nullptr;
    Parameter* b2 = nullptr;
  };
  PerView<OneHead> head_;
  int side_ = 0;
  int dim_ = 0;
};

// Row-major flat column [n,1] -> ScoreMap [side, side].
ScoreMap to_score_map(const Mat& logits_col, int side);

// Row-major-first argmax with strict comparison, so ties pick the earliest
// cell.
int argmax_index(const Mat& logits_col);

// Inference decoding: peak cell plus its offset gives the center (clamped to
// the unit square); the size channels give w,h directly.
Box decode_box(const ScoreMap& score, const Mat& offsets, const Mat& sizes);

// Training decoding on the tape; peak picked from current logit values.
GraphBox decode_box_graph(Tape& t, const HeadOutput& out);

// Gaussian center supervision: peak exactly 1 at the cell containing the gt
// center, sigma = 1 cell.
Mat make_center_map(const Box& gt, int side);

// Exact target encoding of a gt box into (center map, offset map, size map);
// decode_box of this encoding recovers the box.
struct BoxTargets {
  Mat center_map;  // [side, side]
  Mat offsets;     // [n, 2]
  Mat sizes;       // [n, 2]
};
BoxTargets encode_box_targets(const Box& gt, int side);

}  // namespace vlut
