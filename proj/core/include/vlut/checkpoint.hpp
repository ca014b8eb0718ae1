#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vlut/domain.hpp"
#include "vlut/params.hpp"

namespace vlut {

inline constexpr char kCheckpointMagic[] = "vlunitrack-ckpt/1";

/// Optimizer moments aligned with the checkpoint's parameter order.
struct AdamSnapshot {
  std::uint64_t step = 0;
  std::vector<Mat> m;
  std::vector<Mat> v;
};

struct Checkpoint {
  std::string config_text;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, Mat>> params;
  bool has_optimizer = false;
  AdamSnapshot adam;
};

// Snapshot every registered (trainable) parameter in registry order. The
// frozen encoders own no registry entries, so they can never leak in here.
Checkpoint make_checkpoint(const ParamRegistry& reg, const TrackerConfig& cfg,
                           std::uint64_t step);

// Copies stored values back into an identically structured registry. The
// stored and live parameter sets must match exactly in names and shapes.
void restore_registry(const Checkpoint& ck, ParamRegistry& reg);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vlut
