#include "vlut/synthdata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vlut/image.hpp"
#include "vlut/rng.hpp"

namespace fs = std::filesystem;

namespace vlut {

std::vector<std::string> validate_scene_spec(const SceneSpec& s) {
  std::vector<std::string> out;
  auto bad = [&out](const std::string& msg) { out.push_back(msg); };
  if (s.num_frames < 1) bad("num_frames must be at least 1");
  if (s.image_size < 32) bad("image_size must be at least 32");
  if (!(s.uav_scale > 0 && s.uav_scale < 0.5)) bad("uav_scale must lie in (0, 0.5)");
  if (!(s.ground_scale > 0 && s.ground_scale < 0.5)) bad("ground_scale must lie in (0, 0.5)");
  if (s.occlusion_prob < 0 || s.occlusion_prob > 1) bad("occlusion_prob must lie in [0, 1]");
  if (s.occlusion_max_frames < 1) bad("occlusion_max_frames must be at least 1");
  if (s.num_distractors < 0) bad("num_distractors must be non-negative");
  if (s.speed < 0) bad("speed must be non-negative");
  if (s.turn_noise < 0) bad("turn_noise must be non-negative");
  if (!(s.background_cell >= 2)) bad("background_cell must be at least 2 pixels");
  auto color_ok = [](const std::array<double, 3>& c) {
    return c[0] >= 0 && c[0] <= 1 && c[1] >= 0 && c[1] <= 1 && c[2] >= 0 && c[2] <= 1;
  };
  if (!color_ok(s.target_color)) bad("target_color components must lie in [0, 1]");
  for (const auto& col : s.distractor_colors)
    if (!color_ok(col)) {
      bad("distractor_colors components must lie in [0, 1]");
      break;
    }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double spec_real(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("scene spec: key '" + key + "' expects a number, got '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("scene spec: key '" + key + "' expects a number, got '" + v + "'");
  return d;
}

int spec_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  long long n;
  try {
    n = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("scene spec: key '" + key + "' expects an integer, got '" + v +
                                "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("scene spec: key '" + key + "' expects an integer, got '" + v +
                                "'");
  return static_cast<int>(n);
}

std::uint64_t spec_u64(const std::string& key, const std::string& v) {
  size_t pos = 0;
  unsigned long long n;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("scene spec: key '" + key + "' expects an unsigned integer, got '" +
                                v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("scene spec: key '" + key + "' expects an unsigned integer, got '" +
                                v + "'");
  return n;
}

std::array<double, 3> spec_color(const std::string& key, const std::string& v) {
  std::array<double, 3> c{};
  std::istringstream in(v);
  std::string part;
  int i = 0;
  while (std::getline(in, part, ',')) {
    if (i >= 3) break;
    c[i++] = spec_real(key, trim(part));
  }
  if (i != 3)
    throw std::invalid_argument("scene spec: key '" + key + "' expects r,g,b, got '" + v + "'");
  return c;
}

std::string fmt_real(double d) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

std::string fmt_color(const std::array<double, 3>& c) {
  return fmt_real(c[0]) + "," + fmt_real(c[1]) + "," + fmt_real(c[2]);
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& text) {
  SceneSpec s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("scene spec: line " + std::to_string(lineno) +
                                  " is not key=value: '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string val = trim(stripped.substr(eq + 1));

    if (key == "num_frames") s.num_frames = spec_int(key, val);
    else if (key == "image_size") s.image_size = spec_int(key, val);
    else if (key == "target_color") s.target_color = spec_color(key, val);
    else if (key == "distractor_colors") {
      s.distractor_colors.clear();
      std::istringstream list(val);
      std::string item;
      while (std::getline(list, item, ';')) {
        item = trim(item);
        if (!item.empty()) s.distractor_colors.push_back(spec_color(key, item));
      }
    } else if (key == "uav_scale") s.uav_scale = spec_real(key, val);
    else if (key == "ground_scale") s.ground_scale = spec_real(key, val);
    else if (key == "occlusion_prob") s.occlusion_prob = spec_real(key, val);
    else if (key == "occlusion_max_frames") s.occlusion_max_frames = spec_int(key, val);
    else if (key == "num_distractors") s.num_distractors = spec_int(key, val);
    else if (key == "speed") s.speed = spec_real(key, val);
    else if (key == "turn_noise") s.turn_noise = spec_real(key, val);
    else if (key == "background_cell") s.background_cell = spec_real(key, val);
    else if (key == "seed") s.seed = spec_u64(key, val);
    else
      throw std::invalid_argument("scene spec: unknown key '" + key + "' at line " +
                                  std::to_string(lineno));
  }
  return s;
}

SceneSpec load_scene_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scene spec: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene_spec(buf.str());
}

std::string serialize_scene_spec(const SceneSpec& s) {
  std::string out;
  out += "num_frames=" + std::to_string(s.num_frames) + "\n";
  out += "image_size=" + std::to_string(s.image_size) + "\n";
  out += "target_color=" + fmt_color(s.target_color) + "\n";
  if (!s.distractor_colors.empty()) {
    out += "distractor_colors=";
    for (size_t i = 0; i < s.distractor_colors.size(); ++i) {
      if (i) out += ';';
      out += fmt_color(s.distractor_colors[i]);
    }
    out += "\n";
  }
  out += "uav_scale=" + fmt_real(s.uav_scale) + "\n";
  out += "ground_scale=" + fmt_real(s.ground_scale) + "\n";
  out += "occlusion_prob=" + fmt_real(s.occlusion_prob) + "\n";
  out += "occlusion_max_frames=" + std::to_string(s.occlusion_max_frames) + "\n";
  out += "num_distractors=" + std::to_string(s.num_distractors) + "\n";
  out += "speed=" + fmt_real(s.speed) + "\n";
  out += "turn_noise=" + fmt_real(s.turn_noise) + "\n";
  out += "background_cell=" + fmt_real(s.background_cell) + "\n";
  out += "seed=" + std::to_string(s.seed) + "\n";
  return out;
}

namespace {

// Per-view target extents in world units. The aerial target is a small
// square; the ground target is larger with a squashed height standing in for
// a perspective foreshortening.
Box view_box(const SceneSpec& spec, ViewId v, double x, double y) {
  Box b;
  b.cx = x;
  b.cy = y;
  if (v == ViewId::kUav) {
    b.w = spec.uav_scale;
    b.h = spec.uav_scale;
  } else {
    b.w = spec.ground_scale;
    b.h = 0.6 * spec.ground_scale;
  }
  return b;
}

struct WorldTrack {
  std::vector<std::array<double, 2>> pos;
};

WorldTrack simulate_track(const SceneSpec& spec, double margin, std::uint64_t stream) {
  Rng rng(mix_seed(spec.seed, stream));
  WorldTrack track;
  track.pos.reserve(static_cast<size_t>(spec.num_frames));
  double x = rng.uniform(0.3, 0.7);
  double y = rng.uniform(0.3, 0.7);
  double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int f = 0; f < spec.num_frames; ++f) {
    track.pos.push_back({x, y});
    heading += rng.normal() * spec.turn_noise;
    x += spec.speed * std::cos(heading);
    y += spec.speed * std::sin(heading);
    if (x < margin) {
      x = 2 * margin - x;
      heading = std::numbers::pi - heading;
    } else if (x > 1 - margin) {
      x = 2 * (1 - margin) - x;
      heading = std::numbers::pi - heading;
    }
    if (y < margin) {
      y = 2 * margin - y;
      heading = -heading;
    } else if (y > 1 - margin) {
      y = 2 * (1 - margin) - y;
      heading = -heading;
    }
    x = std::clamp(x, margin, 1 - margin);
    y = std::clamp(y, margin, 1 - margin);
  }
  return track;
}

// Smooth seeded value noise: random values on a coarse lattice, bilinearly
// interpolated between the four surrounding lattice points.
ImageTensor make_background(const SceneSpec& spec, ViewId v) {
  const int n = spec.image_size;
  Rng rng(mix_seed(spec.seed, fnv1a64(std::string("background-") + view_name(v))));
  const double cell = spec.background_cell;
  const int lattice = static_cast<int>(std::ceil(n / cell)) + 2;
  std::vector<std::array<double, 3>> values(
      static_cast<size_t>(lattice) * static_cast<size_t>(lattice));
  // muted grey-green range so colored targets stand out
  for (auto& c : values) {
    const double base = rng.uniform(0.25, 0.55);
    c = {base + rng.uniform(-0.05, 0.05), base + rng.uniform(-0.02, 0.08),
         base + rng.uniform(-0.05, 0.05)};
  }
  ImageTensor img(n, n);
  for (int yy = 0; yy < n; ++yy) {
    const double gy = yy / cell;
    const int y0 = static_cast<int>(gy);
    const double fy = gy - y0;
    for (int xx = 0; xx < n; ++xx) {
      const double gx = xx / cell;
      const int x0 = static_cast<int>(gx);
      const double fx = gx - x0;
      for (int p = 0; p < 3; ++p) {
        const double v00 = values[static_cast<size_t>(y0) * lattice + x0][p];
        const double v01 = values[static_cast<size_t>(y0) * lattice + x0 + 1][p];
        const double v10 = values[static_cast<size_t>(y0 + 1) * lattice + x0][p];
        const double v11 = values[static_cast<size_t>(y0 + 1) * lattice + x0 + 1][p];
        img.plane[p](yy, xx) =
            (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
      }
    }
  }
  return img;
}

void draw_box(ImageTensor& img, const Box& b, const std::array<double, 3>& color) {
  const int n = img.width;
  const Corners c = box_to_corners(b);
  fill_rect(img, c.x1 * n, c.y1 * n, c.x2 * n, c.y2 * n, color);
}

struct OcclusionEvent {
  int start = 0;
  int end = 0;  // exclusive
  ViewId view = ViewId::kUav;
  double offset_x = 0.0;  // occluder offset relative to the target extent
  double offset_y = 0.0;
  double shade = 0.5;
};

std::vector<OcclusionEvent> schedule_occlusions(const SceneSpec& spec) {
  std::vector<OcclusionEvent> events;
  if (spec.occlusion_prob <= 0) return events;
  Rng rng(mix_seed(spec.seed, fnv1a64("occlusions")));
  int f = 1;  // frame 0 stays clean so templates always see the target
  while (f < spec.num_frames) {
    if (rng.bernoulli(spec.occlusion_prob)) {
      OcclusionEvent e;
      e.start = f;
      e.end = std::min(spec.num_frames, f + 1 + rng.uniform_int(spec.occlusion_max_frames));
      e.view = rng.bernoulli(0.5) ? ViewId::kUav : ViewId::kGround;
      e.offset_x = rng.uniform(-0.4, 0.4);
      e.offset_y = rng.uniform(-0.4, 0.4);
      e.shade = rng.uniform(0.42, 0.58);
      f = e.end;
      events.push_back(e);
    } else {
      ++f;
    }
  }
  return events;
}

void quantize_image(ImageTensor& img) {
  for (Mat& plane : img.plane)
    plane = plane.unaryExpr([](double v) {
      return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    });
}

}  // namespace

SequencePair generate_sequence_pair(const SceneSpec& spec) {
  const std::vector<std::string> problems = validate_scene_spec(spec);
  if (!problems.empty()) {
    std::string msg = "invalid scene spec:";
    for (const std::string& p : problems) msg += " " + p + ";";
    throw std::invalid_argument(msg);
  }

  const double max_half =
      std::max({spec.uav_scale / 2, spec.ground_scale / 2, 0.3 * spec.ground_scale});
  const double margin = std::min(0.45, max_half + 0.02);

  SequencePair pair;
  pair.spec = spec;
  WorldTrack target = simulate_track(spec, margin, fnv1a64("target"));
  pair.trajectory = target.pos;

  std::vector<WorldTrack> distractors;
  std::vector<std::array<double, 3>> distractor_colors;
  Rng color_rng(mix_seed(spec.seed, fnv1a64("distractor-colors")));
  for (int d = 0; d < spec.num_distractors; ++d) {
    distractors.push_back(
        simulate_track(spec, margin, fnv1a64("distractor-" + std::to_string(d))));
    if (!spec.distractor_colors.empty()) {
      distractor_colors.push_back(spec.distractor_colors[d % spec.distractor_colors.size()]);
    } else {
      std::array<double, 3> c = spec.target_color;
      for (double& ch : c) ch = std::clamp(ch + color_rng.uniform(-0.08, 0.08), 0.0, 1.0);
      distractor_colors.push_back(c);
    }
  }

  const std::vector<OcclusionEvent> events = schedule_occlusions(spec);

  PerView<ImageTensor> background;
  for (ViewId v : kViews) background[v] = make_background(spec, v);

  for (int f = 0; f < spec.num_frames; ++f) {
    const OcclusionEvent* active = nullptr;
    for (const OcclusionEvent& e : events)
      if (f >= e.start && f < e.end) {
        active = &e;
        break;
      }
    for (ViewId v : kViews) {
      ImageTensor img = background[v];
      for (int d = 0; d < spec.num_distractors; ++d)
        draw_box(img, view_box(spec, v, distractors[d].pos[f][0], distractors[d].pos[f][1]),
                 distractor_colors[d]);
      const Box gt = view_box(spec, v, target.pos[f][0], target.pos[f][1]);
      draw_box(img, gt, spec.target_color);
      if (active != nullptr && active->view == v) {
        Box occluder = gt;
        occluder.cx += active->offset_x * gt.w;
        occluder.cy += active->offset_y * gt.h;
        occluder.w *= 2.5;
        occluder.h *= 2.5;
        draw_box(img, occluder,
                 {active->shade, active->shade, active->shade});
      }
      quantize_image(img);
      pair.frames[v].push_back(std::move(img));
      pair.gt[v].push_back(gt);
    }
  }
  return pair;
}

Box CropTransform::crop_to_frame(const Box& b) const {
  Box out;
  out.cx = (x0 + b.cx * side) / frame_w;
  out.cy = (y0 + b.cy * side) / frame_h;
  out.w = b.w * side / frame_w;
  out.h = b.h * side / frame_h;
  return out;
}

Box CropTransform::frame_to_crop(const Box& b) const {
  Box out;
  out.cx = (b.cx * frame_w - x0) / side;
  out.cy = (b.cy * frame_h - y0) / side;
  out.w = b.w * frame_w / side;
  out.h = b.h * frame_h / side;
  return out;
}

RegionCrop crop_region(const ImageTensor& frame, double cx_px, double cy_px, double side_px,
                       int out_size) {
  if (!(side_px > 0)) throw std::invalid_argument("crop_region: side must be positive");
  RegionCrop out;
  out.image = crop_resize(frame, cx_px, cy_px, side_px, out_size, mean_color(frame));
  out.transform = {cx_px - side_px / 2, cy_px - side_px / 2, side_px, out_size, frame.width,
                   frame.height};
  return out;
}

double box_extent_px(const Box& box, const ImageTensor& frame) {
  return std::sqrt(box.w * frame.width * box.h * frame.height);
}

TemplateSearch crop_template_and_search(const ImageTensor& frame, const Box& box,
                                        const TrackerConfig& cfg) {
  if (!(box.w > 0) || !(box.h > 0))
    throw std::invalid_argument("crop_template_and_search: box has no extent");
  const double extent = box_extent_px(box, frame);
  const double cx_px = box.cx * frame.width;
  const double cy_px = box.cy * frame.height;

  TemplateSearch out;
  RegionCrop tmpl = crop_region(frame, cx_px, cy_px, 2.0 * extent, cfg.template_size);
  RegionCrop search = crop_region(frame, cx_px, cy_px, 4.0 * extent, cfg.search_size);
  out.tmpl = std::move(tmpl.image);
  out.search = std::move(search.image);
  out.template_transform = tmpl.transform;
  out.search_transform = search.transform;
  return out;
}

namespace {

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.png", index);
  return buf;
}

}  // namespace

void save_dataset(const std::vector<SequencePair>& pairs, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write manifest in: " + dir);
  for (const SequencePair& pair : pairs) {
    if (pair.id.empty()) throw std::invalid_argument("save_dataset: sequence with empty id");
    manifest << pair.id << "\n";
    const fs::path seq_dir = fs::path(dir) / pair.id;
    fs::create_directories(seq_dir);
    {
      std::ofstream scene(seq_dir / "scene.txt", std::ios::binary);
      if (!scene) throw std::runtime_error("cannot write scene spec in: " + seq_dir.string());
      scene << serialize_scene_spec(pair.spec);
    }
    for (ViewId v : kViews) {
      const fs::path view_dir = seq_dir / view_name(v);
      fs::create_directories(view_dir);
      const std::vector<ImageTensor>& frames = pair.frames[v];
      const std::vector<Box>& gt = pair.gt[v];
      if (frames.size() != gt.size())
        throw std::invalid_argument("save_dataset: sequence '" + pair.id +
                                    "' has mismatched frame and gt counts");
      std::ofstream ann(view_dir / "groundtruth.txt", std::ios::binary);
      if (!ann)
        throw std::runtime_error("cannot write annotations in: " + view_dir.string());
      for (size_t f = 0; f < frames.size(); ++f) {
        write_png((view_dir / frame_name(static_cast<int>(f))).string(), frames[f]);
        const Corners c = box_to_corners(gt[f]);
        const double W = frames[f].width, H = frames[f].height;
        char line[160];
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g\n", f, c.x1 * W, c.y1 * H,
                      (c.x2 - c.x1) * W, (c.y2 - c.y1) * H);
        ann << line;
      }
    }
  }
}

namespace {

std::vector<Box> load_groundtruth(const fs::path& path, size_t frame_count, const std::string& id,
                                  int image_w, int image_h, bool require_full) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing annotation file: " + path.string());
  std::vector<Box> boxes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    double vals[5];
    int i = 0;
    std::istringstream parts(line);
    std::string part;
    while (std::getline(parts, part, ',') && i < 5) {
      part = trim(part);
      size_t pos = 0;
      try {
        vals[i] = std::stod(part, &pos);
      } catch (const std::exception&) {
        pos = std::string::npos;
      }
      if (pos != part.size())
        throw std::runtime_error("corrupt annotation at " + path.string() + ":" +
                                 std::to_string(lineno));
      ++i;
    }
    if (i != 5)
      throw std::runtime_error("corrupt annotation at " + path.string() + ":" +
                               std::to_string(lineno));
    Box b;
    b.w = vals[3] / image_w;
    b.h = vals[4] / image_h;
    b.cx = (vals[1] + vals[3] / 2) / image_w;
    b.cy = (vals[2] + vals[4] / 2) / image_h;
    boxes.push_back(b);
  }
  if (require_full ? boxes.size() != frame_count
                   : (boxes.empty() || boxes.size() > frame_count))
    throw std::runtime_error("sequence '" + id + "': annotation lines (" +
                             std::to_string(boxes.size()) + ") do not match frame count (" +
                             std::to_string(frame_count) + ") in " + path.string());
  return boxes;
}

SequencePair load_one_sequence(const fs::path& seq_dir, const std::string& id,
                               bool require_scene, bool require_full_gt) {
  SequencePair pair;
  pair.id = id;
  const fs::path scene = seq_dir / "scene.txt";
  if (require_scene || fs::exists(scene)) pair.spec = load_scene_spec(scene.string());
  for (ViewId v : kViews) {
    const fs::path view_dir = seq_dir / view_name(v);
    std::vector<fs::path> frame_files;
    if (!fs::is_directory(view_dir))
      throw std::runtime_error("missing view directory: " + view_dir.string());
    for (const auto& entry : fs::directory_iterator(view_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("frame_", 0) == 0 && name.size() > 4 &&
          name.compare(name.size() - 4, 4, ".png") == 0)
        frame_files.push_back(entry.path());
    }
    std::sort(frame_files.begin(), frame_files.end());
    if (frame_files.empty())
      throw std::runtime_error("sequence '" + id + "': no frames in " + view_dir.string());
    for (const fs::path& p : frame_files) pair.frames[v].push_back(read_png(p.string()));
    pair.gt[v] = load_groundtruth(view_dir / "groundtruth.txt", frame_files.size(), id,
                                  pair.frames[v].front().width, pair.frames[v].front().height,
                                  require_full_gt);
  }
  if (pair.frames.uav.size() != pair.frames.ground.size())
    throw std::runtime_error("sequence '" + id + "': views disagree on frame count");
  return pair;
}

}  // namespace

std::vector<SequencePair> load_dataset(const std::string& dir) {
  const fs::path root(dir);
  std::vector<std::string> ids;
  {
    std::ifstream manifest(root / "manifest.txt", std::ios::binary);
    if (manifest) {
      std::string line;
      while (std::getline(manifest, line)) {
        line = trim(line);
        if (!line.empty()) ids.push_back(line);
      }
    }
  }
  if (ids.empty()) throw std::runtime_error("no sequences found in: " + dir);

  std::vector<SequencePair> pairs;
  for (const std::string& id : ids)
    pairs.push_back(load_one_sequence(root / id, id, /*require_scene=*/true,
                                      /*require_full_gt=*/true));
  return pairs;
}

SequencePair load_sequence_pair(const std::string& dir) {
  fs::path p(dir);
  if (!fs::is_directory(p)) throw std::runtime_error("missing sequence directory: " + dir);
  std::string id = p.filename().string();
  if (id.empty()) id = p.parent_path().filename().string();
  return load_one_sequence(p, id, /*require_scene=*/false, /*require_full_gt=*/false);
}

}  // namespace vlut
