#include "dbmi/train.hpp"

#include <chrono>
#include <numeric>
#include <ostream>

#include "dbmi/coupling.hpp"
#include "dbmi/error.hpp"
#include "dbmi/uniform_kernel.hpp"

namespace dbmi {

Trainer::Trainer(ModelConfig model_config, TrainConfig train_config)
    : config_(train_config),
      model_(std::move(model_config), substream_seed(train_config.seed, 0)),
      opt_(model_.layout().total, train_config.learning_rate),
      rng_(substream_seed(train_config.seed, 1)) {
  if (config_.batch_size < 2) {
    throw ValidationError("train: batch size must be >= 2 (derangement)");
  }
  if (config_.inner_samples < 1) {
    throw ValidationError("train: inner_samples must be >= 1");
  }
}

Trainer::Trainer(const Checkpoint& resume, TrainConfig train_config)
    : config_(train_config),
      model_(resume.config, substream_seed(train_config.seed, 0)),
      opt_(model_.layout().total, train_config.learning_rate),
      rng_(substream_seed(train_config.seed, 1)),
      epochs_done_(resume.epochs_done),
      steps_done_(resume.steps_done) {
  if (!resume.has_optimizer || !resume.has_rng) {
    throw ValidationError(
        "train: checkpoint lacks optimizer/RNG state, cannot resume");
  }
  if (resume.params.size() != model_.layout().total) {
    throw ValidationError("train: checkpoint parameter count mismatch");
  }
  model_.params() = resume.params;
  opt_ = resume.opt;
  rng_.set_state(resume.rng_state);
}

TrainReport Trainer::run(const Dataset& dataset, std::int32_t target_epochs,
                         std::ostream* log) {
  const auto t_start = std::chrono::steady_clock::now();
  const std::size_t k = static_cast<std::size_t>(config_.batch_size);
  if (dataset.size() < k) {
    throw ValidationError("train: dataset smaller than one batch");
  }
  if (!(dataset.space == model_.config().kernel.space)) {
    throw ValidationError("train: dataset/model state space mismatch");
  }
  const std::int32_t total_steps = model_.config().grid.num_steps();
  const std::size_t m = static_cast<std::size_t>(config_.inner_samples);
  const std::size_t batches = dataset.size() / k;

  TrainReport report;
  report.step_histogram.assign(static_cast<std::size_t>(total_steps), 0);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<LossTuple> tuples;
  tuples.reserve(2 * k * m);
  std::vector<std::int32_t> steps(k);
  std::vector<double> grad;

  for (; epochs_done_ < target_epochs; ++epochs_done_) {
    // fresh traversal order each epoch, shuffled from the canonical order so
    // an epoch depends only on the stream state at its start (exact resume)
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j = rng_.uniform_below(i + 1);
      std::swap(order[i], order[j]);
    }
    double epoch_v0 = 0.0, epoch_v1 = 0.0;
    std::size_t epoch_n0 = 0, epoch_n1 = 0;

    for (std::size_t batch = 0; batch < batches; ++batch) {
      PairBatch joint;
      joint.coupling = Coupling::kJoint;
      joint.x0.reserve(k);
      joint.x1.reserve(k);
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t idx = order[batch * k + i];
        joint.x0.push_back(dataset.x0[idx]);
        joint.x1.push_back(dataset.x1[idx]);
      }
      const PairBatch indep = permute_coupling(joint, rng_);

      // Target steps uniform over all N+1 transitions; x_prev is sampled
      // from the bridge one index earlier (step 1 pins it to x0).
      for (std::size_t i = 0; i < k; ++i) {
        steps[i] = 1 + static_cast<std::int32_t>(rng_.uniform_below(
                           static_cast<std::uint64_t>(total_steps)));
        ++report.step_histogram[static_cast<std::size_t>(steps[i] - 1)];
      }

      tuples.clear();
      const PairBatch* both[2] = {&joint, &indep};
      for (std::size_t i = 0; i < k; ++i) {
        for (const PairBatch* pb : both) {
          const std::int32_t v = pb->coupling == Coupling::kJoint ? 1 : 0;
          for (std::size_t rep = 0; rep < m; ++rep) {
            LossTuple t;
            t.x_prev = sample_bridge(model_.config().kernel,
                                     model_.config().grid, steps[i] - 1,
                                     pb->x0[i], pb->x1[i], rng_);
            t.x0 = pb->x0[i];
            t.x1 = pb->x1[i];
            t.step = steps[i];
            t.flag = v;
            tuples.push_back(std::move(t));
          }
        }
      }

      const LossBreakdown lb =
          model_.loss_and_grad(tuples, config_.lambda_ce, grad);
      adam_step(model_.params(), opt_, grad);
      ++steps_done_;
      ++report.steps;
      report.tuples += static_cast<std::int64_t>(tuples.size());

      epoch_v0 += lb.sum_independent;
      epoch_n0 += lb.count_independent;
      epoch_v1 += lb.sum_joint;
      epoch_n1 += lb.count_joint;
      if (log != nullptr) {
        (*log) << steps_done_ << '\t' << epochs_done_ << '\t'
               << lb.sum_independent / static_cast<double>(lb.count_independent)
               << '\t' << lb.sum_joint / static_cast<double>(lb.count_joint)
               << '\n';
      }
    }
    report.epoch_loss_independent.push_back(epoch_v0 /
                                            static_cast<double>(epoch_n0));
    report.epoch_loss_joint.push_back(epoch_v1 / static_cast<double>(epoch_n1));
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt;
  ckpt.config = model_.config();
  ckpt.params = model_.params();
  ckpt.has_optimizer = true;
  ckpt.opt = opt_;
  ckpt.has_rng = true;
  ckpt.rng_state = rng_.state();
  ckpt.train_seed = config_.seed;
  ckpt.epochs_done = epochs_done_;
  ckpt.steps_done = steps_done_;
  ckpt.lambda_ce = config_.lambda_ce;
  return ckpt;
}

TransitionModel train(const Dataset& dataset, const ModelConfig& model_config,
                      const TrainConfig& train_config, TrainReport* report,
                      std::ostream* log) {
  Trainer trainer(model_config, train_config);
  TrainReport r = trainer.run(dataset, train_config.epochs, log);
  if (report != nullptr) *report = std::move(r);
  return trainer.model();
}

}  // namespace dbmi
