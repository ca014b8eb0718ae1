#pragma once

#include <string>
#include <vector>

#include "vlut/domain.hpp"

namespace vlut {

/// One evaluated frame of one view. Boxes are normalized; the stored image
/// size converts center errors into pixels.
struct FrameResult {
  int frame_index = 0;
  ViewId view = ViewId::kUav;
  Box pred;
  Box gt;
  int image_w = 0;
  int image_h = 0;
};

// Center location error in pixels.
double cle(const Box& pred, const Box& gt, int image_w, int image_h);

// Intersection over union in [0, 1], with the same degenerate-area floor as
// the GIoU loss.
double iou(const Box& pred, const Box& gt);

// Fraction of frames whose CLE is strictly below the threshold.
double precision_rate(const std::vector<FrameResult>& frames, double threshold_px = 20.0);

// Fraction of frames whose IoU is strictly above the threshold.
double success_rate(const std::vector<FrameResult>& frames, double threshold = 0.5);

struct MetricCurve {
  std::vector<double> thresholds;
  std::vector<double> values;
};

struct ViewMetrics {
  double pr = 0.0;
  double sr = 0.0;
  double mean_cle_px = 0.0;
  double mean_iou = 0.0;
};

struct EvalReport {
  PerView<ViewMetrics> view;
  double average_pr = 0.0;
  double average_sr = 0.0;
  // Sweeps over all frames of both views. The two views always contribute the
  // same frame count, so this equals the unweighted mean of per-view sweeps.
  MetricCurve precision_curve;  // CLE threshold 0..50 px, step 1
  MetricCurve success_curve;    // IoU threshold 0..1, step 0.05
};

// Per-view scores, their unweighted cross-view averages, and both threshold
// sweeps. Throws if the views disagree on frame count or either list is empty.
EvalReport build_report(const PerView<std::vector<FrameResult>>& frames);

std::string report_to_json(const EvalReport& report);

// Writes the JSON record to json_path and the two curves next to it as
// <stem>_precision.csv and <stem>_success.csv (two columns: threshold,value).
void write_report(const EvalReport& report, const std::string& json_path);

}  // namespace vlut
