#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vlut/metrics.hpp"
#include "vlut/model.hpp"
#include "vlut/synthdata.hpp"

namespace vlut {

struct TrackOutput {
  PerView<std::vector<Box>> predictions;      // one normalized box per frame
  PerView<std::vector<FrameResult>> results;  // filled only with full annotations
};

// Test seam replacing the model's per-frame prediction; returns frame-space
// boxes for both views. frame is the index being predicted.
using FramePredictor =
    std::function<PerView<Box>(const SequencePair& seq, int frame)>;

// Sequential dual-view tracking of one pair: templates are cropped once from
// the frame-0 annotations and never updated; each later frame searches around
// the previous prediction. Frame 0 itself scores as a perfect prediction.
TrackOutput track_sequence(const TrackerModel& model, const SequencePair& seq,
                           const FramePredictor& predictor = {});

// Tracks every pair and pools the per-frame results into one report.
EvalReport evaluate_dataset(const TrackerModel& model, const std::vector<SequencePair>& data,
                            const FramePredictor& predictor = {});

// Writes <out_dir>/<view>/predictions.txt (pixel-corner annotation format)
// and, when per-frame truth is available, <out_dir>/<view>/errors.csv with
// rows frame,cle_px,iou.
void write_track_output(const TrackOutput& out, const SequencePair& seq,
                        const std::string& out_dir);

}  // namespace vlut
