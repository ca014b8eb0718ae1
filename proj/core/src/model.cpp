#include "vlut/model.hpp"

#include <stdexcept>

namespace vlut {

TrackerModel::TrackerModel(const TrackerConfig& cfg) : cfg_(cfg) {
  const std::vector<std::string> problems = validate_config(cfg);
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const std::string& p : problems) msg += " " + p + ";";
    throw std::invalid_argument(msg);
  }
  Rng rng(cfg.seed);
  encoder_ = std::make_unique<Encoder>(registry_, cfg, rng);
  if (cfg.enable_vlgp) {
    frozen_ = make_frozen_encoder(cfg);
    vlgp_ = std::make_unique<Vlgp>(registry_, cfg, rng, *frozen_);
  }
  if (cfg.enable_pcva) pcva_ = std::make_unique<Pcva>(registry_, cfg, rng);
  heads_ = std::make_unique<Heads>(registry_, cfg, rng);
}

PerView<ViewForward> TrackerModel::forward(Tape& t, const PerView<ImageTensor>& templates,
                                           const PerView<ImageTensor>& searches) const {
  Var seq_u = encoder_->view_sequence(t, templates.uav, searches.uav);
  Var seq_g = encoder_->view_sequence(t, templates.ground, searches.ground);
  Var joint = encoder_->joint_forward(t, t.concat_rows(seq_u, seq_g));

  PerView<Var> adapted;
  if (pcva_ != nullptr) {
    if (vlgp_ != nullptr) {
      Var prompt_u = vlgp_->make_prompt(t, ViewId::kUav, templates.uav);
      Var prompt_g = vlgp_->make_prompt(t, ViewId::kGround, templates.ground);
      adapted = pcva_->forward(t, joint, prompt_u, prompt_g);
    } else {
      adapted = pcva_->forward(t, joint);
    }
  } else {
    adapted.uav = joint;
    adapted.ground = joint;
  }

  PerView<ViewForward> out;
  for (ViewId v : kViews) {
    Var search = Encoder::slice_view(t, adapted[v], layout(), v, TokenRole::kSearch);
    out[v].search_features = search;
    out[v].head = heads_->forward(t, search, v);
  }
  return out;
}

}  // namespace vlut
