#include "vlut/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace vlut {
namespace {

namespace fs = std::filesystem;

// Keeps the search window sane when a prediction degenerates; the window is
// four times this extent.
double guarded_extent(const Box& b, const ImageTensor& frame) {
  const double raw = box_extent_px(b, frame);
  const double cap = std::max(frame.width, frame.height);
  return std::clamp(raw, 2.0, cap);
}

Box clamp_center(Box b) {
  b.cx = std::clamp(b.cx, 0.0, 1.0);
  b.cy = std::clamp(b.cy, 0.0, 1.0);
  return b;
}

}  // namespace

TrackOutput track_sequence(const TrackerModel& model, const SequencePair& seq,
                           const FramePredictor& predictor) {
  const TrackerConfig& cfg = model.config();
  const std::size_t n = seq.frames.uav.size();
  if (n == 0 || seq.frames.ground.size() != n)
    throw std::runtime_error("track: sequence '" + seq.id + "' has mismatched or empty views");

  PerView<ImageTensor> templates;
  PerView<Box> prev;
  for (ViewId v : kViews) {
    if (seq.gt[v].empty())
      throw std::runtime_error("track: sequence '" + seq.id + "' has no initial box in view " +
                               view_name(v));
    const Box& init = seq.gt[v].front();
    const ImageTensor& frame0 = seq.frames[v].front();
    if (!(init.w > 0) || !(init.h > 0))
      throw std::runtime_error("track: sequence '" + seq.id +
                               "' frame 0 box has no extent in view " + view_name(v));
    templates[v] = crop_region(frame0, init.cx * frame0.width, init.cy * frame0.height,
                               2.0 * box_extent_px(init, frame0), cfg.template_size)
                       .image;
    prev[v] = init;
  }

  TrackOutput out;
  for (ViewId v : kViews) out.predictions[v].push_back(prev[v]);

  for (std::size_t f = 1; f < n; ++f) {
    PerView<Box> pred;
    if (predictor) {
      pred = predictor(seq, static_cast<int>(f));
    } else {
      PerView<ImageTensor> searches;
      PerView<CropTransform> transforms;
      for (ViewId v : kViews) {
        const ImageTensor& frame = seq.frames[v][f];
        RegionCrop crop =
            crop_region(frame, prev[v].cx * frame.width, prev[v].cy * frame.height,
                        4.0 * guarded_extent(prev[v], frame), cfg.search_size);
        searches[v] = std::move(crop.image);
        transforms[v] = crop.transform;
      }
      Tape t;
      PerView<ViewForward> fwd = model.forward(t, templates, searches);
      for (ViewId v : kViews) {
        ScoreMap score = to_score_map(t.value(fwd[v].head.logits), fwd[v].head.side);
        Box in_crop = decode_box(score, t.value(fwd[v].head.offsets), t.value(fwd[v].head.sizes));
        pred[v] = clamp_center(transforms[v].crop_to_frame(in_crop));
      }
    }
    for (ViewId v : kViews) {
      out.predictions[v].push_back(pred[v]);
      prev[v] = pred[v];
    }
  }

  for (ViewId v : kViews) {
    if (seq.gt[v].size() != n) continue;  // partial annotations: predictions only
    const ImageTensor& frame0 = seq.frames[v].front();
    for (std::size_t f = 0; f < n; ++f)
      out.results[v].push_back({static_cast<int>(f), v, out.predictions[v][f], seq.gt[v][f],
                                frame0.width, frame0.height});
  }
  return out;
}

EvalReport evaluate_dataset(const TrackerModel& model, const std::vector<SequencePair>& data,
                            const FramePredictor& predictor) {
  if (data.empty()) throw std::runtime_error("evaluate: dataset is empty");
  PerView<std::vector<FrameResult>> pooled;
  for (const SequencePair& seq : data) {
    for (ViewId v : kViews)
      if (seq.gt[v].size() != seq.frames[v].size())
        throw std::runtime_error("evaluate: sequence '" + seq.id +
                                 "' lacks full annotations in view " + view_name(v));
    TrackOutput out = track_sequence(model, seq, predictor);
    for (ViewId v : kViews)
      pooled[v].insert(pooled[v].end(), out.results[v].begin(), out.results[v].end());
  }
  return build_report(pooled);
}

void write_track_output(const TrackOutput& out, const SequencePair& seq,
                        const std::string& out_dir) {
  for (ViewId v : kViews) {
    const fs::path view_dir = fs::path(out_dir) / view_name(v);
    fs::create_directories(view_dir);
    {
      std::ofstream f(view_dir / "predictions.txt", std::ios::binary | std::ios::trunc);
      if (!f)
        throw std::runtime_error("track: cannot write predictions in: " + view_dir.string());
      for (std::size_t i = 0; i < out.predictions[v].size(); ++i) {
        const ImageTensor& frame = seq.frames[v][i];
        const Corners c = box_to_corners(out.predictions[v][i]);
        const double W = frame.width, H = frame.height;
        char line[160];
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g\n", i, c.x1 * W, c.y1 * H,
                      (c.x2 - c.x1) * W, (c.y2 - c.y1) * H);
        f << line;
      }
    }
    if (!out.results[v].empty()) {
      std::ofstream f(view_dir / "errors.csv", std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("track: cannot write errors in: " + view_dir.string());
      for (const FrameResult& r : out.results[v]) {
        char line[120];
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", r.frame_index,
                      cle(r.pred, r.gt, r.image_w, r.image_h), iou(r.pred, r.gt));
        f << line;
      }
    }
  }
}

}  // namespace vlut
