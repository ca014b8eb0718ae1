#include "vlut/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace vlut {

double cle(const Box& pred, const Box& gt, int image_w, int image_h) {
  const double dx = (pred.cx - gt.cx) * image_w;
  const double dy = (pred.cy - gt.cy) * image_h;
  return std::sqrt(dx * dx + dy * dy);
}

double iou(const Box& pred, const Box& gt) {
  const Corners p = box_to_corners(pred);
  const Corners g = box_to_corners(gt);
  const double iw = std::max(0.0, std::min(p.x2, g.x2) - std::max(p.x1, g.x1));
  const double ih = std::max(0.0, std::min(p.y2, g.y2) - std::max(p.y1, g.y1));
  const double inter = iw * ih;
  const double uni = pred.w * pred.h + gt.w * gt.h - inter;
  return inter / std::max(uni, 1e-8);
}

namespace {

void require_frames(const std::vector<FrameResult>& frames, const char* who) {
  if (frames.empty()) throw std::invalid_argument(std::string(who) + ": empty frame list");
}

}  // namespace

double precision_rate(const std::vector<FrameResult>& frames, double threshold_px) {
  require_frames(frames, "precision_rate");
  std::size_t hits = 0;
  for (const FrameResult& f : frames)
    if (cle(f.pred, f.gt, f.image_w, f.image_h) < threshold_px) ++hits;
  return static_cast<double>(hits) / static_cast<double>(frames.size());
}

double success_rate(const std::vector<FrameResult>& frames, double threshold) {
  require_frames(frames, "success_rate");
  std::size_t hits = 0;
  for (const FrameResult& f : frames)
    if (iou(f.pred, f.gt) > threshold) ++hits;
  return static_cast<double>(hits) / static_cast<double>(frames.size());
}

EvalReport build_report(const PerView<std::vector<FrameResult>>& frames) {
  if (frames.uav.size() != frames.ground.size())
    throw std::invalid_argument("build_report: views disagree on frame count (" +
                                std::to_string(frames.uav.size()) + " uav vs " +
                                std::to_string(frames.ground.size()) + " ground)");
  require_frames(frames.uav, "build_report");

  EvalReport report;
  std::vector<FrameResult> all;
  all.reserve(frames.uav.size() * 2);
  for (ViewId v : kViews) {
    const std::vector<FrameResult>& list = frames[v];
    ViewMetrics& m = report.view[v];
    m.pr = precision_rate(list);
    m.sr = success_rate(list);
    double cle_sum = 0.0;
    double iou_sum = 0.0;
    for (const FrameResult& f : list) {
      cle_sum += cle(f.pred, f.gt, f.image_w, f.image_h);
      iou_sum += iou(f.pred, f.gt);
    }
    m.mean_cle_px = cle_sum / static_cast<double>(list.size());
    m.mean_iou = iou_sum / static_cast<double>(list.size());
    all.insert(all.end(), list.begin(), list.end());
  }
  report.average_pr = 0.5 * (report.view.uav.pr + report.view.ground.pr);
  report.average_sr = 0.5 * (report.view.uav.sr + report.view.ground.sr);

  for (int px = 0; px <= 50; ++px) {
    report.precision_curve.thresholds.push_back(static_cast<double>(px));
    report.precision_curve.values.push_back(precision_rate(all, static_cast<double>(px)));
  }
  for (int k = 0; k <= 20; ++k) {
    const double tau = 0.05 * k;
    report.success_curve.thresholds.push_back(tau);
    report.success_curve.values.push_back(success_rate(all, tau));
  }
  return report;
}

namespace {

nlohmann::json curve_json(const MetricCurve& c) {
  return {{"thresholds", c.thresholds}, {"values", c.values}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  for (ViewId v : kViews) {
    const ViewMetrics& m = report.view[v];
    j[view_name(v)] = {{"pr", m.pr},
                       {"sr", m.sr},
                       {"mean_cle_px", m.mean_cle_px},
                       {"mean_iou", m.mean_iou}};
  }
  j["average"] = {{"pr", report.average_pr}, {"sr", report.average_sr}};
  j["curves"] = {{"precision", curve_json(report.precision_curve)},
                 {"success", curve_json(report.success_curve)}};
  return j.dump(2) + "\n";
}

namespace {

void write_curve_csv(const MetricCurve& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write curve file: " + path);
  char line[64];
  for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", c.thresholds[i], c.values[i]);
    out << line;
  }
}

}  // namespace

void write_report(const EvalReport& report, const std::string& json_path) {
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report file: " + json_path);
  out << report_to_json(report);
  out.close();

  std::string stem = json_path;
  const std::size_t dot = stem.find_last_of('.');
  const std::size_t slash = stem.find_last_of("/\\");
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    stem.resize(dot);
  write_curve_csv(report.precision_curve, stem + "_precision.csv");
  write_curve_csv(report.success_curve, stem + "_success.csv");
}

}  // namespace vlut
