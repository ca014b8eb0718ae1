#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vlut/checkpoint.hpp"
#include "vlut/losses.hpp"
#include "vlut/model.hpp"
#include "vlut/optim.hpp"
#include "vlut/rng.hpp"
#include "vlut/synthdata.hpp"

namespace vlut {

struct TrainState {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  LossBreakdown running;  // running mean of the per-step batch means
  std::uint64_t count_uav_to_ground = 0;
  std::uint64_t count_ground_to_uav = 0;
  std::uint64_t count_none = 0;

  std::uint64_t direction_total() const {
    return count_uav_to_ground + count_ground_to_uav + count_none;
  }
};

struct StepRecord {
  std::uint64_t step = 0;  // 0-based index of the step this record describes
  double lr = 0.0;
  double grad_norm = 0.0;  // global norm before clipping
  LossBreakdown loss;      // batch means; direction from batch-mean confidences
};

// One structured log record per step as a single JSON line (no newline).
std::string step_record_json(const StepRecord& r);

/// Optimizes a TrackerModel over dual-view sequence pairs. Each step samples
/// batch_size (template frame, search frame) tuples with a bounded random
/// frame gap, jitters the search crop, and descends the mean total loss.
class Trainer {
 public:
  Trainer(TrackerModel& model, std::vector<SequencePair> data);

  StepRecord step();

  std::uint64_t total_steps() const { return total_steps_; }
  std::uint64_t steps_per_epoch() const { return steps_per_epoch_; }
  const TrainState& state() const { return state_; }
  AdamW& optimizer() { return opt_; }
  TrackerModel& model() { return *model_; }

  // Full training snapshot: parameters, optimizer moments, step count.
  Checkpoint make_train_checkpoint() const;
  // Resumes parameters, moments, and the step counter. The running loss and
  // direction counters restart from zero.
  void restore(const Checkpoint& ck);

 private:
  struct TrainSample {
    PerView<ImageTensor> templates;
    PerView<ImageTensor> searches;
    PerView<Box> gt;  // search-frame truth in search-crop coordinates
  };
  TrainSample sample_tuple();

  TrackerModel* model_;
  std::vector<SequencePair> data_;
  AdamW opt_;
  Rng sampler_;
  TrainState state_;
  std::uint64_t total_steps_ = 0;
  std::uint64_t steps_per_epoch_ = 0;
};

// Builds a model from the config, trains it to completion on the dataset,
// optionally writing one log line per step, and returns the final snapshot.
Checkpoint train(const TrackerConfig& cfg, const std::vector<SequencePair>& data,
                 std::ostream* log = nullptr);

}  // namespace vlut
