#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dbmi/checkpoint.hpp"
#include "dbmi/dataset.hpp"
#include "dbmi/model.hpp"

namespace dbmi {

struct TrainConfig {
  std::int32_t epochs = 150;
  std::int32_t batch_size = 512;   // K
  std::int32_t inner_samples = 1;  // M for training
  double learning_rate = 3e-4;
  double lambda_ce = 0.0;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> epoch_loss_independent;  // per-epoch mean, v = 0 terms
  std::vector<double> epoch_loss_joint;        // v = 1 terms
  std::vector<std::int64_t> step_histogram;    // draws of n_k, index n-1
  std::int64_t steps = 0;
  std::int64_t tuples = 0;
  double wall_seconds = 0.0;
};

// Amortized bridge-matching training. Each optimization step consumes
// exactly 2*K*M loss tuples: K joint pairs, their derangement as the
// independent batch, a shared timestep draw per item, and M bridge samples
// per item and coupling. Dataset traversal is epoch-wise with reshuffling;
// the trailing partial batch of an epoch is dropped so every step has the
// same size. Fully deterministic under (seed, config).
class Trainer {
 public:
  // Fresh run: parameters initialized from substream 0 of config.seed, the
  // training stream from substream 1.
  Trainer(ModelConfig model_config, TrainConfig train_config);

  // Exact continuation of a saved run; the checkpoint must carry optimizer
  // and RNG state.
  Trainer(const Checkpoint& resume, TrainConfig train_config);

  // Trains until the epoch counter reaches target_epochs. Appends one
  // "step\tepoch\tloss_v0\tloss_v1" row per step to log when given.
  TrainReport run(const Dataset& dataset, std::int32_t target_epochs,
                  std::ostream* log = nullptr);

  const TransitionModel& model() const { return model_; }
  std::int64_t epochs_done() const { return epochs_done_; }

  // Snapshot with optimizer and RNG state; resumable.
  Checkpoint checkpoint() const;

 private:
  TrainConfig config_;
  TransitionModel model_;
  AdamState opt_;
  RngStream rng_;
  std::int64_t epochs_done_ = 0;
  std::int64_t steps_done_ = 0;
};

// One-shot convenience wrapper over Trainer.
TransitionModel train(const Dataset& dataset, const ModelConfig& model_config,
                      const TrainConfig& train_config,
                      TrainReport* report = nullptr,
                      std::ostream* log = nullptr);

}  // namespace dbmi
