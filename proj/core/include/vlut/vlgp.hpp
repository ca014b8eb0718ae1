#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vlut/autodiff.hpp"
#include "vlut/domain.hpp"
#include "vlut/params.hpp"
#include "vlut/rng.hpp"

namespace vlut {

// Frozen text/image embedding pair. Implementations own no trainable
// parameters; their outputs enter the graph as constants, so no gradient can
// reach them by construction.
class FrozenEncoder {
 public:
  virtual ~FrozenEncoder() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd text_encode(const std::string& text) const = 0;
  virtual Eigen::VectorXd image_encode(const ImageTensor& img) const = 0;
};

// Default dependency-free encoder: strings map to seeded pseudo-random unit
// variance vectors; images map through a fixed random projection of their
// 16x16 grayscale thumbnail plus a fixed bias.
class StubFrozenEncoder final : public FrozenEncoder {
 public:
  explicit StubFrozenEncoder(int dim);
  int dim() const override { return dim_; }
  Eigen::VectorXd text_encode(const std::string& text) const override;
  Eigen::VectorXd image_encode(const ImageTensor& img) const override;

 private:
  int dim_;
  Mat img_proj_;             // [dim, 256]
  Eigen::VectorXd img_bias_; // [dim]
};

// Adapter for an externally prepared encoder pack (format "vlut-frozen/1"):
// linear text model over hashed character trigram counts and a linear image
// model over the 16x16 grayscale thumbnail.
class PackFrozenEncoder final : public FrozenEncoder {
 public:
  explicit PackFrozenEncoder(const std::string& path);
  int dim() const override { return dim_; }
  int text_feature_dim() const { return static_cast<int>(txt_proj_.cols()); }
  Eigen::VectorXd text_encode(const std::string& text) const override;
  Eigen::VectorXd image_encode(const ImageTensor& img) const override;

 private:
  int dim_ = 0;
  Mat txt_proj_;
  Eigen::VectorXd txt_bias_;
  Mat img_proj_;
  Eigen::VectorXd img_bias_;
};

// Writes a randomly initialized encoder pack; used to exercise the external
// adapter path without a real pretrained model.
void write_frozen_pack(const std::string& path, int dim, int text_feature_dim,
                       std::uint64_t seed);

// Dispatch on cfg.frozen_encoder ("stub" or "external:<path>"); validates the
// pack's dimension against cfg.frozen_embed_dim.
std::unique_ptr<FrozenEncoder> make_frozen_encoder(const TrackerConfig& cfg);

struct TextPromptBank {
  std::vector<std::string> uav_texts;
  std::vector<std::string> ground_texts;

  static TextPromptBank from_config(const TrackerConfig& cfg);
  const std::vector<std::string>& texts(ViewId v) const {
    return v == ViewId::kUav ? uav_texts : ground_texts;
  }
};

// Elementwise mean of the frozen text embeddings over the view's prompt list.
Eigen::VectorXd text_prior(ViewId v, const TextPromptBank& bank, const FrozenEncoder& enc);

Eigen::VectorXd visual_context(const ImageTensor& tmpl, const FrozenEncoder& enc);

// L2 normalization with a guarded denominator max(|x|, 1e-8).
Eigen::VectorXd l2_normalize(const Eigen::VectorXd& x);

// Trainable fusion head: one prompt token per view from the fixed text prior
// and the current template's visual context.
class Vlgp {
 public:
  Vlgp(ParamRegistry& reg, const TrackerConfig& cfg, Rng& rng, const FrozenEncoder& enc);

  // [1, D] prompt token; gradient reaches only alpha and the projection.
  Var make_prompt(Tape& t, ViewId v, const ImageTensor& tmpl) const;

  const Eigen::VectorXd& cached_text_prior(ViewId v) const {
    return v == ViewId::kUav ? text_prior_uav_ : text_prior_ground_;
  }

 private:
  const FrozenEncoder* enc_;
  Parameter* alpha_ = nullptr;
  Parameter* proj_w_ = nullptr;  // [C, D]
  Parameter* proj_b_ = nullptr;  // [1, D]
  Eigen::VectorXd text_prior_uav_;
  Eigen::VectorXd text_prior_ground_;
};

}  // namespace vlut
