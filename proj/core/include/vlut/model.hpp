#pragma once

#include <memory>

#include "vlut/autodiff.hpp"
#include "vlut/domain.hpp"
#include "vlut/encoder.hpp"
#include "vlut/heads.hpp"
#include "vlut/params.hpp"
#include "vlut/pcva.hpp"
#include "vlut/vlgp.hpp"

namespace vlut {

struct ViewForward {
  HeadOutput head;
  Var search_features;  // [search_tokens, D], the features behind the score map
};

/// Full dual-view tracker: shared encoder over the joint token sequence,
/// optional prompt generation and cross-view adaptation, per-view heads.
/// With the adapter disabled the heads read the encoder's search tokens
/// directly; prompts only take effect through the adapter, so disabling it
/// makes the prompt path inert as well.
class TrackerModel {
 public:
  explicit TrackerModel(const TrackerConfig& cfg);

  // Joint forward for one synchronized dual-view sample.
  PerView<ViewForward> forward(Tape& t, const PerView<ImageTensor>& templates,
                               const PerView<ImageTensor>& searches) const;

  const TrackerConfig& config() const { return cfg_; }
  const TokenLayout& layout() const { return encoder_->layout(); }
  ParamRegistry& registry() { return registry_; }
  const ParamRegistry& registry() const { return registry_; }
  const Encoder& encoder() const { return *encoder_; }
  bool has_vlgp() const { return vlgp_ != nullptr; }
  bool has_pcva() const { return pcva_ != nullptr; }

 private:
  TrackerConfig cfg_;
  ParamRegistry registry_;
  std::unique_ptr<FrozenEncoder> frozen_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<Vlgp> vlgp_;
  std::unique_ptr<Pcva> pcva_;
  std::unique_ptr<Heads> heads_;
};

}  // namespace vlut
