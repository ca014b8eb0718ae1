#include "vlut/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace vlut {
namespace {

const char* direction_label(DistillDirection d) {
  switch (d) {
    case DistillDirection::kUavToGround: return "u->g";
    case DistillDirection::kGroundToUav: return "g->u";
    case DistillDirection::kNone: break;
  }
  return "none";
}

}  // namespace

std::string step_record_json(const StepRecord& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["lr"] = r.lr;
  j["grad_norm"] = r.grad_norm;
  j["total"] = r.loss.total;
  j["l1_uav"] = r.loss.l1.uav;
  j["l1_ground"] = r.loss.l1.ground;
  j["giou_uav"] = r.loss.giou.uav;
  j["giou_ground"] = r.loss.giou.ground;
  j["focal_uav"] = r.loss.focal.uav;
  j["focal_ground"] = r.loss.focal.ground;
  j["cmd"] = r.loss.cmd;
  j["c_uav"] = r.loss.c_uav;
  j["c_ground"] = r.loss.c_ground;
  j["direction"] = direction_label(r.loss.direction);
  return j.dump();
}

Trainer::Trainer(TrackerModel& model, std::vector<SequencePair> data)
    : model_(&model),
      data_(std::move(data)),
      opt_(model.registry(), model.config().optimizer.weight_decay),
      sampler_(mix_seed(model.config().seed, fnv1a64("train-sampler"))) {
  if (data_.empty()) throw std::invalid_argument("trainer: dataset is empty");
  for (const SequencePair& seq : data_) {
    for (ViewId v : kViews) {
      if (seq.frames[v].empty())
        throw std::invalid_argument("trainer: sequence '" + seq.id + "' has no frames");
      if (seq.gt[v].size() != seq.frames[v].size())
        throw std::invalid_argument("trainer: sequence '" + seq.id +
                                    "' lacks full annotations in view " + view_name(v));
      for (const Box& b : seq.gt[v])
        if (!(b.w > 0) || !(b.h > 0))
          throw std::invalid_argument("trainer: sequence '" + seq.id +
                                      "' has a box without extent in view " + view_name(v));
    }
  }
  const OptimizerConfig& oc = model.config().optimizer;
  steps_per_epoch_ = static_cast<std::uint64_t>(
      std::max(1, oc.samples_per_epoch / std::max(1, oc.batch_size)));
  total_steps_ = static_cast<std::uint64_t>(oc.epochs) * steps_per_epoch_;
}

Trainer::TrainSample Trainer::sample_tuple() {
  const TrackerConfig& cfg = model_->config();
  const SequencePair& seq = data_[static_cast<std::size_t>(
      sampler_.uniform_int(static_cast<int>(data_.size())))];
  const int n = static_cast<int>(seq.frames.uav.size());
  const int t0 = sampler_.uniform_int(n);
  const int gap = std::min(cfg.frame_gap_max, n - 1);
  const int offset = sampler_.uniform_int(2 * gap + 1) - gap;
  const int t1 = std::clamp(t0 + offset, 0, n - 1);

  TrainSample s;
  for (ViewId v : kViews) {
    const ImageTensor& tmpl_frame = seq.frames[v][static_cast<std::size_t>(t0)];
    const Box& tmpl_box = seq.gt[v][static_cast<std::size_t>(t0)];
    s.templates[v] = crop_region(tmpl_frame, tmpl_box.cx * tmpl_frame.width,
                                 tmpl_box.cy * tmpl_frame.height,
                                 2.0 * box_extent_px(tmpl_box, tmpl_frame), cfg.template_size)
                         .image;

    const ImageTensor& search_frame = seq.frames[v][static_cast<std::size_t>(t1)];
    const Box& search_box = seq.gt[v][static_cast<std::size_t>(t1)];
    const double side0 = 4.0 * box_extent_px(search_box, search_frame);
    const double dx = sampler_.uniform(-cfg.search_jitter_center, cfg.search_jitter_center);
    const double dy = sampler_.uniform(-cfg.search_jitter_center, cfg.search_jitter_center);
    const double scale = 1.0 + sampler_.uniform(-cfg.search_jitter_scale, cfg.search_jitter_scale);
    RegionCrop crop = crop_region(search_frame, search_box.cx * search_frame.width + dx * side0,
                                  search_box.cy * search_frame.height + dy * side0, side0 * scale,
                                  cfg.search_size);
    s.searches[v] = std::move(crop.image);
    s.gt[v] = crop.transform.frame_to_crop(search_box);
  }
  return s;
}

StepRecord Trainer::step() {
  const TrackerConfig& cfg = model_->config();
  const int batch = std::max(1, cfg.optimizer.batch_size);

  Tape t;
  Var total_acc;
  LossBreakdown mean;
  mean.c_uav = 0.0;
  mean.c_ground = 0.0;
  for (int b = 0; b < batch; ++b) {
    TrainSample s = sample_tuple();
    PerView<ViewForward> fwd = model_->forward(t, s.templates, s.searches);
    PerView<ViewGraphInputs> in;
    for (ViewId v : kViews) in[v] = {fwd[v].head, s.gt[v], fwd[v].search_features};
    GraphLoss gl = total_loss_graph(t, in, cfg.loss_weights);
    total_acc = b == 0 ? gl.total : t.add(total_acc, gl.total);
    for (ViewId v : kViews) {
      mean.l1[v] += gl.values.l1[v] / batch;
      mean.giou[v] += gl.values.giou[v] / batch;
      mean.focal[v] += gl.values.focal[v] / batch;
    }
    mean.cmd += gl.values.cmd / batch;
    mean.total += gl.values.total / batch;
    mean.c_uav += gl.values.c_uav / batch;
    mean.c_ground += gl.values.c_ground / batch;
  }
  mean.direction = distill_direction(mean.c_uav, mean.c_ground);

  Var mean_total = t.affine(total_acc, 1.0 / batch, 0.0);
  const double loss_value = t.value(mean_total)(0, 0);
  if (!std::isfinite(loss_value)) {
    StepRecord diag{state_.step, 0.0, 0.0, mean};
    throw std::runtime_error("training aborted at step " + std::to_string(state_.step) +
                             ": non-finite loss; last record " + step_record_json(diag));
  }

  model_->registry().zero_grads();
  t.backward(mean_total);
  const double grad_norm = clip_global_norm(model_->registry(), cfg.grad_clip_norm);
  const double lr = cosine_lr(cfg.optimizer.learning_rate, state_.step, total_steps_);
  opt_.step(lr);

  StepRecord rec{state_.step, lr, grad_norm, mean};

  ++state_.step;
  state_.epoch = steps_per_epoch_ ? state_.step / steps_per_epoch_ : 0;
  const double k = static_cast<double>(state_.step);
  for (ViewId v : kViews) {
    state_.running.l1[v] += (mean.l1[v] - state_.running.l1[v]) / k;
    state_.running.giou[v] += (mean.giou[v] - state_.running.giou[v]) / k;
    state_.running.focal[v] += (mean.focal[v] - state_.running.focal[v]) / k;
  }
  state_.running.cmd += (mean.cmd - state_.running.cmd) / k;
  state_.running.total += (mean.total - state_.running.total) / k;
  state_.running.c_uav += (mean.c_uav - state_.running.c_uav) / k;
  state_.running.c_ground += (mean.c_ground - state_.running.c_ground) / k;
  switch (mean.direction) {
    case DistillDirection::kUavToGround: ++state_.count_uav_to_ground; break;
    case DistillDirection::kGroundToUav: ++state_.count_ground_to_uav; break;
    case DistillDirection::kNone: ++state_.count_none; break;
  }
  return rec;
}

Checkpoint Trainer::make_train_checkpoint() const {
  Checkpoint ck = make_checkpoint(model_->registry(), model_->config(), state_.step);
  ck.has_optimizer = true;
  ck.adam.step = opt_.step_count();
  ck.adam.m = opt_.moment_m();
  ck.adam.v = opt_.moment_v();
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  restore_registry(ck, model_->registry());
  if (ck.has_optimizer) opt_.restore(ck.adam.step, ck.adam.m, ck.adam.v);
  state_ = TrainState{};
  state_.step = ck.step;
  state_.epoch = steps_per_epoch_ ? state_.step / steps_per_epoch_ : 0;
}

Checkpoint train(const TrackerConfig& cfg, const std::vector<SequencePair>& data,
                 std::ostream* log) {
  TrackerModel model(cfg);
  Trainer trainer(model, data);
  while (trainer.state().step < trainer.total_steps()) {
    StepRecord rec = trainer.step();
    if (log) *log << step_record_json(rec) << '\n';
  }
  return trainer.make_train_checkpoint();
}

}  // namespace vlut
