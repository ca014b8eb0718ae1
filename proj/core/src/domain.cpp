#include "vlut/domain.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vlut {

Corners box_to_corners(const Box& b) {
  return {b.cx - b.w / 2.0, b.cy - b.h / 2.0, b.cx + b.w / 2.0, b.cy + b.h / 2.0};
}

Box corners_to_box(const Corners& c) {
  return {(c.x1 + c.x2) / 2.0, (c.y1 + c.y2) / 2.0, c.x2 - c.x1, c.y2 - c.y1};
}

std::vector<std::string> validate_config(const TrackerConfig& c) {
  std::vector<std::string> out;
  auto bad = [&out](const std::string& msg) { out.push_back(msg); };

  if (c.patch_size <= 0) bad("patch_size must be positive");
  if (c.template_size <= 0) bad("template_size must be positive");
  if (c.search_size <= 0) bad("search_size must be positive");
  if (c.patch_size > 0 && c.template_size % c.patch_size != 0)
    bad("template_size not divisible by patch_size");
  if (c.patch_size > 0 && c.search_size % c.patch_size != 0)
    bad("search_size not divisible by patch_size");
  if (c.embed_dim <= 0) bad("embed_dim must be positive");
  if (c.attn_heads <= 0) bad("attn_heads must be positive");
  if (c.attn_heads > 0 && c.embed_dim % c.attn_heads != 0)
    bad("embed_dim not divisible by attn_heads");
  if (c.encoder_depth < 0) bad("encoder_depth must be non-negative");
  if (c.frozen_embed_dim <= 0) bad("frozen_embed_dim must be positive");
  if (c.prompt_texts_uav.empty()) bad("empty prompt set (uav)");
  if (c.prompt_texts_ground.empty()) bad("empty prompt set (ground)");

  const LossWeights& lw = c.loss_weights;
  if (lw.lambda_cls < 0) bad("lambda_cls must be non-negative");
  if (lw.lambda_giou < 0) bad("lambda_giou must be non-negative");
  if (lw.lambda_loc < 0) bad("lambda_loc must be non-negative");
  if (lw.lambda_cmd < 0) bad("lambda_cmd must be non-negative");
  if (!std::isfinite(lw.alpha_init)) bad("alpha_init must be finite");

  const OptimizerConfig& opt = c.optimizer;
  if (!(opt.learning_rate >= 0) || !std::isfinite(opt.learning_rate))
    bad("learning_rate must be non-negative and finite");
  if (opt.weight_decay < 0) bad("weight_decay must be non-negative");
  if (opt.batch_size <= 0) bad("batch_size must be positive");
  if (opt.epochs <= 0) bad("epochs must be positive");
  if (opt.samples_per_epoch <= 0) bad("samples_per_epoch must be positive");

  if (c.frozen_encoder != "stub" && c.frozen_encoder.rfind("external:", 0) != 0)
    bad("frozen_encoder must be 'stub' or 'external:<path>'");
  if (c.frame_gap_max < 0) bad("frame_gap_max must be non-negative");
  if (c.search_jitter_center < 0) bad("search_jitter_center must be non-negative");
  if (c.search_jitter_scale < 0 || c.search_jitter_scale >= 1.0)
    bad("search_jitter_scale must lie in [0,1)");
  if (c.grad_clip_norm < 0) bad("grad_clip_norm must be non-negative");
  return out;
}

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

int parse_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  long long n;
  try {
    n = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + v + "'");
  return static_cast<int>(n);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  size_t pos = 0;
  unsigned long long n;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
  return n;
}

double parse_real(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
  return d;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ';')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ';';
    out += items[i];
  }
  return out;
}

std::string fmt_real(double d) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

}  // namespace

TrackerConfig parse_config(const std::string& text) {
  TrackerConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key=value: '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string val = trim(stripped.substr(eq + 1));

    if (key == "patch_size") c.patch_size = parse_int(key, val);
    else if (key == "template_size") c.template_size = parse_int(key, val);
    else if (key == "search_size") c.search_size = parse_int(key, val);
    else if (key == "embed_dim") c.embed_dim = parse_int(key, val);
    else if (key == "encoder_depth") c.encoder_depth = parse_int(key, val);
    else if (key == "attn_heads") c.attn_heads = parse_int(key, val);
    else if (key == "frozen_embed_dim") c.frozen_embed_dim = parse_int(key, val);
    else if (key == "prompt_texts_uav") c.prompt_texts_uav = parse_list(val);
    else if (key == "prompt_texts_ground") c.prompt_texts_ground = parse_list(val);
    else if (key == "lambda_cls") c.loss_weights.lambda_cls = parse_real(key, val);
    else if (key == "lambda_giou") c.loss_weights.lambda_giou = parse_real(key, val);
    else if (key == "lambda_loc") c.loss_weights.lambda_loc = parse_real(key, val);
    else if (key == "lambda_cmd") c.loss_weights.lambda_cmd = parse_real(key, val);
    else if (key == "alpha_init") c.loss_weights.alpha_init = parse_real(key, val);
    else if (key == "learning_rate") c.optimizer.learning_rate = parse_real(key, val);
    else if (key == "weight_decay") c.optimizer.weight_decay = parse_real(key, val);
    else if (key == "batch_size") c.optimizer.batch_size = parse_int(key, val);
    else if (key == "epochs") c.optimizer.epochs = parse_int(key, val);
    else if (key == "samples_per_epoch") c.optimizer.samples_per_epoch = parse_int(key, val);
    else if (key == "seed") c.seed = parse_u64(key, val);
    else if (key == "enable_pcva") c.enable_pcva = parse_bool(key, val);
    else if (key == "enable_vlgp") c.enable_vlgp = parse_bool(key, val);
    else if (key == "frozen_encoder") c.frozen_encoder = val;
    else if (key == "frame_gap_max") c.frame_gap_max = parse_int(key, val);
    else if (key == "search_jitter_center") c.search_jitter_center = parse_real(key, val);
    else if (key == "search_jitter_scale") c.search_jitter_scale = parse_real(key, val);
    else if (key == "grad_clip_norm") c.grad_clip_norm = parse_real(key, val);
    else
      throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                  std::to_string(lineno));
  }
  return c;
}

TrackerConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const TrackerConfig& c) {
  std::ostringstream out;
  out << "patch_size=" << c.patch_size << "\n";
  out << "template_size=" << c.template_size << "\n";
  out << "search_size=" << c.search_size << "\n";
  out << "embed_dim=" << c.embed_dim << "\n";
  out << "encoder_depth=" << c.encoder_depth << "\n";
  out << "attn_heads=" << c.attn_heads << "\n";
  out << "frozen_embed_dim=" << c.frozen_embed_dim << "\n";
  out << "prompt_texts_uav=" << join_list(c.prompt_texts_uav) << "\n";
  out << "prompt_texts_ground=" << join_list(c.prompt_texts_ground) << "\n";
  out << "lambda_cls=" << fmt_real(c.loss_weights.lambda_cls) << "\n";
  out << "lambda_giou=" << fmt_real(c.loss_weights.lambda_giou) << "\n";
  out << "lambda_loc=" << fmt_real(c.loss_weights.lambda_loc) << "\n";
  out << "lambda_cmd=" << fmt_real(c.loss_weights.lambda_cmd) << "\n";
  out << "alpha_init=" << fmt_real(c.loss_weights.alpha_init) << "\n";
  out << "learning_rate=" << fmt_real(c.optimizer.learning_rate) << "\n";
  out << "weight_decay=" << fmt_real(c.optimizer.weight_decay) << "\n";
  out << "batch_size=" << c.optimizer.batch_size << "\n";
  out << "epochs=" << c.optimizer.epochs << "\n";
  out << "samples_per_epoch=" << c.optimizer.samples_per_epoch << "\n";
  out << "seed=" << c.seed << "\n";
  out << "enable_pcva=" << (c.enable_pcva ? "true" : "false") << "\n";
  out << "enable_vlgp=" << (c.enable_vlgp ? "true" : "false") << "\n";
  out << "frozen_encoder=" << c.frozen_encoder << "\n";
  out << "frame_gap_max=" << c.frame_gap_max << "\n";
  out << "search_jitter_center=" << fmt_real(c.search_jitter_center) << "\n";
  out << "search_jitter_scale=" << fmt_real(c.search_jitter_scale) << "\n";
  out << "grad_clip_norm=" << fmt_real(c.grad_clip_norm) << "\n";
  return out.str();
}

}  // namespace vlut
