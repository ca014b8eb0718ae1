#include "vlut/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace vlut {

namespace {

constexpr double kFocalGamma = 2.0;
constexpr double kFocalBeta = 4.0;
constexpr double kAreaFloor = 1e-8;

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

Var scalar_const(Tape& t, double v) { return t.constant(Mat::Constant(1, 1, v)); }

}  // namespace

double classification_loss(const Mat& logits, const Mat& target) {
  if (logits.rows() != target.rows() || logits.cols() != target.cols())
    throw std::invalid_argument("classification_loss: shape mismatch");
  double loss = 0.0;
  int peaks = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const double x = logits(r, c);
      const double tv = target(r, c);
      if (tv == 1.0) {
        ++peaks;
        // -(1-p)^g * log p, with log p = -softplus(-x) and 1-p = sigmoid(-x)
        loss += std::pow(stable_sigmoid(-x), kFocalGamma) * stable_softplus(-x);
      } else {
        loss += std::pow(1.0 - tv, kFocalBeta) * std::pow(stable_sigmoid(x), kFocalGamma) *
                stable_softplus(x);
      }
    }
  return loss / std::max(peaks, 1);
}

double l1_loss(const Box& pred, const Box& gt) {
  return (std::abs(pred.cx - gt.cx) + std::abs(pred.cy - gt.cy) + std::abs(pred.w - gt.w) +
          std::abs(pred.h - gt.h)) /
         4.0;
}

double giou_loss(const Box& pred, const Box& gt) {
  const Corners p = box_to_corners(pred);
  const Corners g = box_to_corners(gt);
  const double iw = std::max(0.0, std::min(p.x2, g.x2) - std::max(p.x1, g.x1));
  const double ih = std::max(0.0, std::min(p.y2, g.y2) - std::max(p.y1, g.y1));
  const double inter = iw * ih;
  const double uni = pred.w * pred.h + gt.w * gt.h - inter;
  const double iou = inter / std::max(uni, kAreaFloor);
  const double ew = std::max(p.x2, g.x2) - std::min(p.x1, g.x1);
  const double eh = std::max(p.y2, g.y2) - std::min(p.y1, g.y1);
  const double enclose = ew * eh;
  const double giou = iou - (enclose - uni) / std::max(enclose, kAreaFloor);
  return 1.0 - giou;
}

double confidence(const ScoreMap& score) {
  return stable_sigmoid(score.logits.maxCoeff());
}

DistillDirection distill_direction(double c_uav, double c_ground) {
  if (c_uav > c_ground) return DistillDirection::kUavToGround;
  if (c_ground > c_uav) return DistillDirection::kGroundToUav;
  return DistillDirection::kNone;
}

double cmd_loss(const Mat& f_uav, const Mat& f_ground, double c_uav, double c_ground, int grid_h,
                int grid_w) {
  if (f_uav.rows() != f_ground.rows() || f_uav.cols() != f_ground.cols())
    throw std::invalid_argument("cmd_loss: feature shape mismatch");
  if (f_uav.rows() != static_cast<Eigen::Index>(grid_h) * grid_w)
    throw std::invalid_argument("cmd_loss: features do not cover the grid");
  if (distill_direction(c_uav, c_ground) == DistillDirection::kNone) return 0.0;
  return (f_ground - f_uav).squaredNorm() / (static_cast<double>(grid_h) * grid_w);
}

LossBreakdown total_loss(const PerView<ViewLossInputs>& in, const Mat& f_uav,
                         const Mat& f_ground, int grid_h, int grid_w, const LossWeights& lw) {
  LossBreakdown out;
  for (ViewId v : kViews) {
    out.l1[v] = l1_loss(in[v].pred, in[v].gt);
    out.giou[v] = giou_loss(in[v].pred, in[v].gt);
    out.focal[v] = classification_loss(in[v].score.logits, in[v].center_target);
  }
  out.c_uav = confidence(in.uav.score);
  out.c_ground = confidence(in.ground.score);
  out.direction = distill_direction(out.c_uav, out.c_ground);
  out.cmd = cmd_loss(f_uav, f_ground, out.c_uav, out.c_ground, grid_h, grid_w);
  out.total = lw.lambda_cls * (out.l1.uav + out.l1.ground) +
              lw.lambda_giou * (out.giou.uav + out.giou.ground) +
              lw.lambda_loc * (out.focal.uav + out.focal.ground) + lw.lambda_cmd * out.cmd;
  return out;
}

Var classification_loss_graph(Tape& t, Var logits_col, const Mat& target_map, int side) {
  const Mat& x = t.value(logits_col);
  const int n = side * side;
  if (x.rows() != n || x.cols() != 1)
    throw std::invalid_argument("classification_loss_graph: logits do not match grid");
  if (target_map.rows() != side || target_map.cols() != side)
    throw std::invalid_argument("classification_loss_graph: target does not match grid");

  Mat peak_mask = Mat::Zero(n, 1);
  Mat neg_weight(n, 1);
  int peaks = 0;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const int i = r * side + c;
      const double tv = target_map(r, c);
      if (tv == 1.0) {
        peak_mask(i, 0) = 1.0;
        neg_weight(i, 0) = 0.0;
        ++peaks;
      } else {
        neg_weight(i, 0) = std::pow(1.0 - tv, kFocalBeta);
      }
    }

  Var neg_x = t.affine(logits_col, -1.0, 0.0);
  Var pos_term = t.mul(t.constant(peak_mask),
                       t.mul(t.pow_const(t.sigmoid(neg_x), kFocalGamma), t.softplus(neg_x)));
  Var neg_term = t.mul(t.constant(neg_weight),
                       t.mul(t.pow_const(t.sigmoid(logits_col), kFocalGamma),
                             t.softplus(logits_col)));
  return t.affine(t.add(t.sum(pos_term), t.sum(neg_term)), 1.0 / std::max(peaks, 1), 0.0);
}

Var l1_loss_graph(Tape& t, const GraphBox& pred, const Box& gt) {
  Var d = t.add(t.add(t.abs(t.sub(pred.cx, scalar_const(t, gt.cx))),
                      t.abs(t.sub(pred.cy, scalar_const(t, gt.cy)))),
                t.add(t.abs(t.sub(pred.w, scalar_const(t, gt.w))),
                      t.abs(t.sub(pred.h, scalar_const(t, gt.h)))));
  return t.affine(d, 0.25, 0.0);
}

Var giou_loss_graph(Tape& t, const GraphBox& pred, const Box& gt) {
  const Corners g = box_to_corners(gt);
  Var half_w = t.affine(pred.w, 0.5, 0.0);
  Var half_h = t.affine(pred.h, 0.5, 0.0);
  Var px1 = t.sub(pred.cx, half_w);
  Var px2 = t.add(pred.cx, half_w);
  Var py1 = t.sub(pred.cy, half_h);
  Var py2 = t.add(pred.cy, half_h);
  Var gx1 = scalar_const(t, g.x1), gx2 = scalar_const(t, g.x2);
  Var gy1 = scalar_const(t, g.y1), gy2 = scalar_const(t, g.y2);
  Var zero = scalar_const(t, 0.0);
  Var floor_c = scalar_const(t, kAreaFloor);

  Var iw = t.cmax(t.sub(t.cmin(px2, gx2), t.cmax(px1, gx1)), zero);
  Var ih = t.cmax(t.sub(t.cmin(py2, gy2), t.cmax(py1, gy1)), zero);
  Var inter = t.mul(iw, ih);
  Var uni = t.sub(t.add(t.mul(pred.w, pred.h), scalar_const(t, gt.w * gt.h)), inter);
  Var iou = t.div(inter, t.cmax(uni, floor_c));
  Var ew = t.sub(t.cmax(px2, gx2), t.cmin(px1, gx1));
  Var eh = t.sub(t.cmax(py2, gy2), t.cmin(py1, gy1));
  Var enclose = t.mul(ew, eh);
  Var giou = t.sub(iou, t.div(t.sub(enclose, uni), t.cmax(enclose, floor_c)));
  return t.affine(giou, -1.0, 1.0);
}

Var cmd_loss_graph(Tape& t, Var f_student, Var f_teacher, int grid_h, int grid_w) {
  const Mat& s = t.value(f_student);
  const Mat& te = t.value(f_teacher);
  if (s.rows() != te.rows() || s.cols() != te.cols())
    throw std::invalid_argument("cmd_loss_graph: feature shape mismatch");
  if (s.rows() != static_cast<Eigen::Index>(grid_h) * grid_w)
    throw std::invalid_argument("cmd_loss_graph: features do not cover the grid");
  Var diff = t.sub(f_student, t.stop_gradient(f_teacher));
  return t.affine(t.sum_squares(diff), 1.0 / (static_cast<double>(grid_h) * grid_w), 0.0);
}

GraphLoss total_loss_graph(Tape& t, const PerView<ViewGraphInputs>& in, const LossWeights& lw) {
  GraphLoss out;
  const int side = in.uav.head.side;
  PerView<Var> l1_v, giou_v, focal_v;
  for (ViewId v : kViews) {
    out.boxes[v] = decode_box_graph(t, in[v].head);
    const Mat target = make_center_map(in[v].gt, in[v].head.side);
    focal_v[v] = classification_loss_graph(t, in[v].head.logits, target, in[v].head.side);
    l1_v[v] = l1_loss_graph(t, out.boxes[v], in[v].gt);
    giou_v[v] = giou_loss_graph(t, out.boxes[v], in[v].gt);
    out.values.l1[v] = t.value(l1_v[v])(0, 0);
    out.values.giou[v] = t.value(giou_v[v])(0, 0);
    out.values.focal[v] = t.value(focal_v[v])(0, 0);
  }
  out.values.c_uav = stable_sigmoid(t.value(in.uav.head.logits).maxCoeff());
  out.values.c_ground = stable_sigmoid(t.value(in.ground.head.logits).maxCoeff());
  out.values.direction = distill_direction(out.values.c_uav, out.values.c_ground);

  Var total = t.affine(t.add(l1_v.uav, l1_v.ground), lw.lambda_cls, 0.0);
  total = t.add(total, t.affine(t.add(giou_v.uav, giou_v.ground), lw.lambda_giou, 0.0));
  total = t.add(total, t.affine(t.add(focal_v.uav, focal_v.ground), lw.lambda_loc, 0.0));

  if (out.values.direction != DistillDirection::kNone && lw.lambda_cmd != 0.0) {
    const bool uav_teaches = out.values.direction == DistillDirection::kUavToGround;
    Var student = uav_teaches ? in.ground.search_features : in.uav.search_features;
    Var teacher = uav_teaches ? in.uav.search_features : in.ground.search_features;
    Var cmd = cmd_loss_graph(t, student, teacher, side, side);
    out.values.cmd = t.value(cmd)(0, 0);
    total = t.add(total, t.affine(cmd, lw.lambda_cmd, 0.0));
  } else if (out.values.direction != DistillDirection::kNone) {
    // value reported even when the weight removes it from the graph
    const Mat& fu = t.value(in.uav.search_features);
    const Mat& fg = t.value(in.ground.search_features);
    out.values.cmd = (fg - fu).squaredNorm() / (static_cast<double>(side) * side);
  }

  out.values.total = t.value(total)(0, 0);
  out.total = total;
  return out;
}

}  // namespace vlut
