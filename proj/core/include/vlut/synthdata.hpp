#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vlut/domain.hpp"

namespace vlut {

/// Recipe for one paired synthetic sequence. Everything downstream is a pure
/// function of the spec, seed included.
struct SceneSpec {
  int num_frames = 40;
  int image_size = 256;
  std::array<double, 3> target_color{0.85, 0.2, 0.15};
  std::vector<std::array<double, 3>> distractor_colors;  // empty: jittered target color
  double uav_scale = 0.06;     // target extent as a fraction of the aerial frame
  double ground_scale = 0.16;  // larger in the ground frame
  double occlusion_prob = 0.0;
  int occlusion_max_frames = 8;
  int num_distractors = 0;
  double speed = 0.01;       // world units per frame
  double turn_noise = 0.35;  // heading noise, radians per frame
  double background_cell = 32.0;  // value-noise cell size in pixels
  std::uint64_t seed = 1;
};

// Empty when valid, otherwise one human-readable diagnostic per violation.
std::vector<std::string> validate_scene_spec(const SceneSpec& spec);

// key=value text, same conventions as the tracker config format. Color values
// are comma triples; distractor_colors takes a semicolon-separated list.
SceneSpec parse_scene_spec(const std::string& text);
SceneSpec load_scene_spec(const std::string& path);
std::string serialize_scene_spec(const SceneSpec& spec);

struct SequencePair {
  std::string id;
  SceneSpec spec;
  PerView<std::vector<ImageTensor>> frames;
  PerView<std::vector<Box>> gt;
  // Shared world positions the per-view boxes were rendered from. Derived
  // data; not persisted by save_dataset.
  std::vector<std::array<double, 2>> trajectory;
};

SequencePair generate_sequence_pair(const SceneSpec& spec);

/// Square crop window in frame pixel coordinates plus the resized output
/// size; maps boxes between crop-normalized and frame-normalized coordinates.
struct CropTransform {
  double x0 = 0.0;
  double y0 = 0.0;
  double side = 1.0;
  int out_size = 0;
  int frame_w = 0;
  int frame_h = 0;

  Box crop_to_frame(const Box& b) const;
  Box frame_to_crop(const Box& b) const;
};

struct TemplateSearch {
  ImageTensor tmpl;
  ImageTensor search;
  CropTransform template_transform;
  CropTransform search_transform;
};

// Template crop covers twice the box extent, search four times, both resized
// to the configured input sizes. Out-of-frame samples take the frame's mean
// color.
TemplateSearch crop_template_and_search(const ImageTensor& frame, const Box& box,
                                        const TrackerConfig& cfg);

struct RegionCrop {
  ImageTensor image;
  CropTransform transform;
};

// One square crop of side_px pixels centered at (cx_px, cy_px), resampled to
// out_size; samples outside the frame take the frame's mean color.
RegionCrop crop_region(const ImageTensor& frame, double cx_px, double cy_px, double side_px,
                       int out_size);

// Geometric-mean box extent in pixels of the given frame.
double box_extent_px(const Box& box, const ImageTensor& frame);

// Directory layout: <root>/<seq_id>/<view>/frame_%05d.png with per-view
// groundtruth.txt (frame_index,x,y,w,h in pixels, corner format) plus a
// scene.txt spec echo per sequence and a <root>/manifest.txt of sequence ids.
void save_dataset(const std::vector<SequencePair>& pairs, const std::string& dir);
std::vector<SequencePair> load_dataset(const std::string& dir);

// Loads one sequence directory holding uav/ and ground/ subdirectories. The
// scene.txt echo is optional here, and annotations may cover only a leading
// prefix of the frames (at least frame 0), so externally produced sequences
// can be tracked from an initial box alone.
SequencePair load_sequence_pair(const std::string& dir);

}  // namespace vlut
