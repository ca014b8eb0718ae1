#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vlut {

using Mat = Eigen::MatrixXd;

enum class ViewId { kUav, kGround };

inline const char* view_name(ViewId v) { return v == ViewId::kUav ? "uav" : "ground"; }
inline ViewId other_view(ViewId v) { return v == ViewId::kUav ? ViewId::kGround : ViewId::kUav; }

// Small pair-of-views holder so per-view state never turns into parallel arrays.
template <typename T>
struct PerView {
  T uav{};
  T ground{};
  T& operator[](ViewId v) { return v == ViewId::kUav ? uav : ground; }
  const T& operator[](ViewId v) const { return v == ViewId::kUav ? uav : ground; }
};

inline constexpr std::array<ViewId, 2> kViews = {ViewId::kUav, ViewId::kGround};

// RGB image, one matrix per channel, values in [0,1], row = y, col = x.
struct ImageTensor {
  int height = 0;
  int width = 0;
  std::array<Mat, 3> plane;

  ImageTensor() = default;
  ImageTensor(int h, int w) : height(h), width(w) {
    for (auto& p : plane) p = Mat::Zero(h, w);
  }
};

// Axis-aligned box, center-normalized to the unit square of its image.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct Corners {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
};

Corners box_to_corners(const Box& b);
Box corners_to_box(const Corners& c);

struct ScoreMap {
  int height = 0;
  int width = 0;
  Mat logits;  // [height, width]

  ScoreMap() = default;
  ScoreMap(int h, int w) : height(h), width(w), logits(Mat::Zero(h, w)) {}
};

struct LossWeights {
  double lambda_cls = 5.0;
  double lambda_giou = 2.0;
  double lambda_loc = 1.0;
  double lambda_cmd = 0.5;
  double alpha_init = 0.5;  // starting value of the prompt balance scalar
};

struct OptimizerConfig {
  double learning_rate = 3e-4;
  double weight_decay = 1e-4;
  int batch_size = 8;
  int epochs = 80;
  int samples_per_epoch = 10000;
};

struct TrackerConfig {
  int patch_size = 16;
  int template_size = 64;
  int search_size = 128;
  int embed_dim = 64;      // D
  int encoder_depth = 2;
  int attn_heads = 4;
  int frozen_embed_dim = 64;  // C
  std::vector<std::string> prompt_texts_uav = {"top-down view", "aerial view"};
  std::vector<std::string> prompt_texts_ground = {"ground view", "eye-level perspective"};
  LossWeights loss_weights;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;

  bool enable_pcva = true;
  bool enable_vlgp = true;
  std::string frozen_encoder = "stub";  // stub | external:<path>

  int frame_gap_max = 30;
  double search_jitter_center = 0.15;
  double search_jitter_scale = 0.2;
  double grad_clip_norm = 5.0;

  int template_tokens() const {
    const int s = template_size / patch_size;
    return s * s;
  }
  int search_tokens() const {
    const int s = search_size / patch_size;
    return s * s;
  }
  int score_map_side() const { return search_size / patch_size; }
};

// Returns one named diagnostic per violated invariant; empty means valid.
std::vector<std::string> validate_config(const TrackerConfig& c);

// Flat key=value text, one key per line, '#' comments, unknown keys rejected.
TrackerConfig parse_config(const std::string& text);
TrackerConfig load_config(const std::string& path);
std::string serialize_config(const TrackerConfig& c);

}  // namespace vlut
