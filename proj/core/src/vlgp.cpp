#include "vlut/vlgp.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "vlut/encoder.hpp"
#include "vlut/image.hpp"

namespace vlut {

namespace {

// Fixed root seed for the stub: the frozen pair plays the role of a
// pretrained model, so it must not vary with the training seed.
constexpr std::uint64_t kStubRoot = 0x766c757466726f7aULL;
constexpr int kThumbSide = 16;

Eigen::VectorXd seeded_normal_vector(std::uint64_t seed, int n) {
  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

Eigen::VectorXd thumbnail_features(const ImageTensor& img) {
  const Mat thumb = bilinear_resize(rgb_to_gray(img), kThumbSide, kThumbSide);
  Eigen::VectorXd flat(kThumbSide * kThumbSide);
  for (int y = 0; y < kThumbSide; ++y)
    for (int x = 0; x < kThumbSide; ++x) flat(y * kThumbSide + x) = thumb(y, x);
  return flat;
}

const char kPackMagic[] = "vlut-frozen/1\n";

void write_mat(std::ofstream& out, const Mat& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Mat read_mat(std::ifstream& in, int rows, int cols, const std::string& path) {
  Mat m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw std::runtime_error("frozen pack truncated: '" + path + "'");
  return m;
}

}  // namespace

StubFrozenEncoder::StubFrozenEncoder(int dim) : dim_(dim) {
  if (dim <= 0) throw std::invalid_argument("StubFrozenEncoder: dim must be positive");
  const int feat = kThumbSide * kThumbSide;
  Rng rng(mix_seed(kStubRoot, fnv1a64("image-projection")));
  img_proj_.resize(dim, feat);
  const double scale = 1.0 / std::sqrt(static_cast<double>(feat));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < feat; ++j) img_proj_(i, j) = rng.normal() * scale;
  img_bias_ = seeded_normal_vector(mix_seed(kStubRoot, fnv1a64("image-bias")), dim);
}

Eigen::VectorXd StubFrozenEncoder::text_encode(const std::string& text) const {
  return seeded_normal_vector(mix_seed(kStubRoot, fnv1a64(text)), dim_);
}

Eigen::VectorXd StubFrozenEncoder::image_encode(const ImageTensor& img) const {
  return img_proj_ * thumbnail_features(img) + img_bias_;
}

PackFrozenEncoder::PackFrozenEncoder(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("frozen pack: cannot open '" + path + "'");
  char magic[sizeof(kPackMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kPackMagic, sizeof(magic)) != 0)
    throw std::runtime_error("frozen pack: bad magic in '" + path + "'");
  std::int32_t dim = 0, tdim = 0;
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  in.read(reinterpret_cast<char*>(&tdim), sizeof(tdim));
  if (!in || dim <= 0 || tdim <= 0)
    throw std::runtime_error("frozen pack: bad header in '" + path + "'");
  dim_ = dim;
  txt_proj_ = read_mat(in, dim, tdim, path);
  txt_bias_ = read_mat(in, dim, 1, path);
  img_proj_ = read_mat(in, dim, kThumbSide * kThumbSide, path);
  img_bias_ = read_mat(in, dim, 1, path);
}

Eigen::VectorXd PackFrozenEncoder::text_encode(const std::string& text) const {
  const int tdim = text_feature_dim();
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(tdim);
  const std::string padded = " " + text + " ";
  for (size_t i = 0; i + 3 <= padded.size(); ++i)
    counts(static_cast<int>(fnv1a64(std::string_view(padded).substr(i, 3)) % tdim)) += 1.0;
  return txt_proj_ * counts + txt_bias_;
}

Eigen::VectorXd PackFrozenEncoder::image_encode(const ImageTensor& img) const {
  return img_proj_ * thumbnail_features(img) + img_bias_;
}

void write_frozen_pack(const std::string& path, int dim, int text_feature_dim,
                       std::uint64_t seed) {
  if (dim <= 0 || text_feature_dim <= 0)
    throw std::invalid_argument("write_frozen_pack: dimensions must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_frozen_pack: cannot open '" + path + "'");
  out.write(kPackMagic, sizeof(kPackMagic) - 1);
  const std::int32_t d = dim, td = text_feature_dim;
  out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  out.write(reinterpret_cast<const char*>(&td), sizeof(td));
  Rng rng(seed);
  write_mat(out, normal_init(rng, dim, text_feature_dim, 1.0 / std::sqrt(text_feature_dim)));
  write_mat(out, normal_init(rng, dim, 1, 1.0));
  const int feat = kThumbSide * kThumbSide;
  write_mat(out, normal_init(rng, dim, feat, 1.0 / std::sqrt(feat)));
  write_mat(out, normal_init(rng, dim, 1, 1.0));
  if (!out) throw std::runtime_error("write_frozen_pack: write failure for '" + path + "'");
}

std::unique_ptr<FrozenEncoder> make_frozen_encoder(const TrackerConfig& cfg) {
  if (cfg.frozen_encoder == "stub")
    return std::make_unique<StubFrozenEncoder>(cfg.frozen_embed_dim);
  const std::string prefix = "external:";
  if (cfg.frozen_encoder.rfind(prefix, 0) == 0) {
    auto enc = std::make_unique<PackFrozenEncoder>(cfg.frozen_encoder.substr(prefix.size()));
    if (enc->dim() != cfg.frozen_embed_dim)
      throw std::invalid_argument(
          "frozen pack dimension " + std::to_string(enc->dim()) +
          " does not match frozen_embed_dim " + std::to_string(cfg.frozen_embed_dim));
    return enc;
  }
  throw std::invalid_argument("frozen_encoder must be 'stub' or 'external:<path>'");
}

TextPromptBank TextPromptBank::from_config(const TrackerConfig& cfg) {
  return {cfg.prompt_texts_uav, cfg.prompt_texts_ground};
}

Eigen::VectorXd text_prior(ViewId v, const TextPromptBank& bank, const FrozenEncoder& enc) {
  const std::vector<std::string>& texts = bank.texts(v);
  if (texts.empty()) throw std::invalid_argument("text_prior: empty prompt set");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(enc.dim());
  for (const std::string& s : texts) acc += enc.text_encode(s);
  return acc / static_cast<double>(texts.size());
}

Eigen::VectorXd visual_context(const ImageTensor& tmpl, const FrozenEncoder& enc) {
  return enc.image_encode(tmpl);
}

Eigen::VectorXd l2_normalize(const Eigen::VectorXd& x) {
  return x / std::max(x.norm(), 1e-8);
}

Vlgp::Vlgp(ParamRegistry& reg, const TrackerConfig& cfg, Rng& rng, const FrozenEncoder& enc)
    : enc_(&enc) {
  if (enc.dim() != cfg.frozen_embed_dim)
    throw std::invalid_argument("Vlgp: encoder dim does not match frozen_embed_dim");
  alpha_ = &reg.add("vlgp.alpha", Mat::Constant(1, 1, cfg.loss_weights.alpha_init));
  proj_w_ = &reg.add("vlgp.proj.w", normal_init(rng, cfg.frozen_embed_dim, cfg.embed_dim, 0.02));
  proj_b_ = &reg.add("vlgp.proj.b", Mat::Zero(1, cfg.embed_dim));
  const TextPromptBank bank = TextPromptBank::from_config(cfg);
  text_prior_uav_ = text_prior(ViewId::kUav, bank, enc);
  text_prior_ground_ = text_prior(ViewId::kGround, bank, enc);
}

Var Vlgp::make_prompt(Tape& t, ViewId v, const ImageTensor& tmpl) const {
  const Eigen::VectorXd normed_text = l2_normalize(cached_text_prior(v));
  const Eigen::VectorXd normed_ctx = l2_normalize(visual_context(tmpl, *enc_));
  Var text_row = t.constant(normed_text.transpose());
  Var ctx_row = t.constant(normed_ctx.transpose());
  Var fused = t.add(text_row, t.scale_by(ctx_row, t.param(*alpha_)));
  return t.add_row(t.matmul(fused, t.param(*proj_w_)), t.param(*proj_b_));
}

}  // namespace vlut
