#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dbmi/adam.hpp"
#include "dbmi/model.hpp"

namespace dbmi {

// Trained-model container. Binary layout (all integers little-endian):
//   bytes 0..7   magic "DBMICP01"
//   u64          header length H
//   H bytes      JSON header: model config echo, train seed, progress
//                counters, optimizer hyperparameters, RNG state (hex)
//   u64          parameter count P
//   P doubles    parameters (raw IEEE-754, little-endian)
//   if optimizer present: P doubles first moments, P doubles second moments
// Save/load round-trips bit-exactly.
struct Checkpoint {
  ModelConfig config;
  std::vector<double> params;

  bool has_optimizer = false;
  AdamState opt;

  bool has_rng = false;
  std::array<std::uint64_t, 4> rng_state{};

  std::uint64_t train_seed = 0;
  std::int64_t epochs_done = 0;
  std::int64_t steps_done = 0;
  double lambda_ce = 0.0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dbmi
