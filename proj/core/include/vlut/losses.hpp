#pragma once

#include "vlut/autodiff.hpp"
#include "vlut/domain.hpp"
#include "vlut/heads.hpp"

namespace vlut {

// Penalty-reduced focal loss on sigmoid(logits) against a Gaussian center
// map: peak cells use (1-p)^2 log p, the rest (1-t)^4 p^2 log(1-p),
// normalized by the number of peak cells.
double classification_loss(const Mat& logits, const Mat& target);

// Mean absolute difference over the four normalized coordinates.
double l1_loss(const Box& pred, const Box& gt);

// 1 - GIoU with degenerate areas floored at 1e-8; range [0, 2).
double giou_loss(const Box& pred, const Box& gt);

// max response of the score map after sigmoid, in (0,1).
double confidence(const ScoreMap& score);

enum class DistillDirection { kUavToGround, kGroundToUav, kNone };

// Strict comparisons; exact confidence ties give kNone.
DistillDirection distill_direction(double c_uav, double c_ground);

// Confidence-switched distillation: the higher-confidence view teaches the
// other. Features are compared under a frozen teacher (value only; the
// returned number equals the plain squared difference normalized by H*W,
// summed over channels). A tie contributes exactly zero.
double cmd_loss(const Mat& f_uav, const Mat& f_ground, double c_uav, double c_ground, int grid_h,
                int grid_w);

struct LossBreakdown {
  PerView<double> l1{};
  PerView<double> giou{};
  PerView<double> focal{};
  double cmd = 0.0;
  double total = 0.0;
  double c_uav = 0.5;
  double c_ground = 0.5;
  DistillDirection direction = DistillDirection::kNone;
};

struct ViewLossInputs {
  ScoreMap score;
  Box pred;
  Box gt;
  Mat center_target;  // [side, side]
};

// Plain-number loss assembly:
// lambda_cls*(L1_u+L1_g) + lambda_giou*(GIoU_u+GIoU_g)
//   + lambda_loc*(cls_u+cls_g) + lambda_cmd*CMD.
LossBreakdown total_loss(const PerView<ViewLossInputs>& in, const Mat& f_uav,
                         const Mat& f_ground, int grid_h, int grid_w, const LossWeights& lw);

// Graph builders mirroring the plain functions; used by the trainer.
Var classification_loss_graph(Tape& t, Var logits_col, const Mat& target_map, int side);
Var l1_loss_graph(Tape& t, const GraphBox& pred, const Box& gt);
Var giou_loss_graph(Tape& t, const GraphBox& pred, const Box& gt);
// student learns from a gradient-frozen teacher
Var cmd_loss_graph(Tape& t, Var f_student, Var f_teacher, int grid_h, int grid_w);

struct ViewGraphInputs {
  HeadOutput head;
  Box gt;
  Var search_features;  // [n, D] adapted search tokens feeding the CMD term
};

struct GraphLoss {
  Var total;
  PerView<GraphBox> boxes;
  LossBreakdown values;
};

GraphLoss total_loss_graph(Tape& t, const PerView<ViewGraphInputs>& in, const LossWeights& lw);

}  // namespace vlut
