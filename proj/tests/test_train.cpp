#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "dbmi/error.hpp"
#include "dbmi/estimate.hpp"
#include "dbmi/lowdim.hpp"
#include "dbmi/reciprocal.hpp"
#include "dbmi/train.hpp"
#include "testutil.hpp"

using namespace dbmi;

namespace {

// x1 = x0, exactly balanced so the empirical joint equals diag(0.5, 0.5);
// the trainer learns the empirical coupling, so an unbalanced draw would
// shift the v=0 target away from the population oracle
Dataset identity_dataset(std::size_t count, std::uint64_t /*seed*/) {
  Dataset ds;
  ds.space = StateSpace(2, 1);
  for (std::size_t i = 0; i < count; ++i) {
    const Category c = static_cast<Category>(i % 2);
    ds.x0.push_back({c});
    ds.x1.push_back({c});
  }
  return ds;
}

ModelConfig identity_model_config() {
  ModelConfig cfg;
  cfg.kernel = UniformKernel(StateSpace(2, 1), 0.2);
  cfg.grid = TimeGrid(2);
  cfg.embed_dim = 16;
  cfg.hidden_dims = {64};
  return cfg;
}

TrainConfig quick_train_config(std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = 300;
  tc.batch_size = 64;
  tc.inner_samples = 1;
  tc.learning_rate = 2e-3;
  tc.seed = seed;
  return tc;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("train: learned transitions match the exact ones on a toy task") {
  const Dataset ds = identity_dataset(512, 21);
  const ModelConfig mc = identity_model_config();
  TrainConfig tc = quick_train_config(5);
  TrainReport report;
  const TransitionModel model = train(ds, mc, tc, &report);

  CHECK(report.steps == 300 * (512 / 64));
  CHECK(report.tuples == report.steps * 2 * 64 * 1);

  const JointPMF joint = testutil::diagonal_joint(StateSpace(2, 1));
  const ReciprocalOracle oracle(joint, mc.kernel, mc.grid);
  const ReciprocalOracle oracle_ind(joint.product_of_marginals(), mc.kernel,
                                    mc.grid);

  double worst_joint = 0.0, worst_ind = 0.0;
  for (std::int32_t n = 1; n <= 3; ++n) {
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t z = 0; z < 2; ++z) {
        if (n == 1 && z != a) continue;  // zero-probability event
        const State sz{static_cast<Category>(z)};
        const State sa{static_cast<Category>(a)};
        const std::vector<double> tj =
            oracle.transition(Coupling::kJoint, n, z, a);
        const FactorizedDist mj = model.transition_probs(sz, sa, n, 1);
        worst_joint =
            std::max(worst_joint, total_variation(tj, mj.row(0)));

        // v=0 should track the transitions of the product coupling
        const std::vector<double> ti =
            oracle_ind.transition(Coupling::kJoint, n, z, a);
        const FactorizedDist mi = model.transition_probs(sz, sa, n, 0);
        worst_ind = std::max(worst_ind, total_variation(ti, mi.row(0)));
      }
    }
  }
  CHECK(worst_joint <= 0.05);
  CHECK(worst_ind <= 0.05);

  // the coupling flag changes the answer on correlated data
  const FactorizedDist v1 = model.predict_endpoint({0}, {0}, 2, 1);
  const FactorizedDist v0 = model.predict_endpoint({0}, {0}, 2, 0);
  CHECK(total_variation(v1.row(0), v0.row(0)) > 0.01);
}

TEST_CASE("train: loss decreases on the low-dimensional benchmark") {
  RngStream task_rng(33);
  const LowDimTask task = gen_lowdim_task(2, 10, 0.5, task_rng);
  RngStream sample_rng(34);
  const Dataset ds = sample_lowdim(task, 2000, sample_rng);

  ModelConfig mc;
  mc.kernel = UniformKernel(task.space, 1e-4);
  mc.grid = TimeGrid(8);
  mc.embed_dim = 32;
  mc.hidden_dims = {64};
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 256;
  tc.learning_rate = 1e-3;
  tc.seed = 7;
  TrainReport report;
  train(ds, mc, tc, &report);
  REQUIRE(report.epoch_loss_joint.size() == 10);
  const double first =
      report.epoch_loss_joint.front() + report.epoch_loss_independent.front();
  const double last =
      report.epoch_loss_joint.back() + report.epoch_loss_independent.back();
  CHECK(last < first);
}

TEST_CASE("train: timestep draws are uniform over all transitions") {
  const Dataset ds = identity_dataset(256, 2);
  const ModelConfig mc = identity_model_config();
  TrainConfig tc = quick_train_config(11);
  tc.epochs = 50;
  TrainReport report;
  train(ds, mc, tc, &report);

  REQUIRE(report.step_histogram.size() == 3);  // N+1 target steps
  std::int64_t total = 0;
  for (std::int64_t c : report.step_histogram) total += c;
  CHECK(total == report.steps * 64);
  const double p = 1.0 / 3.0;
  const double sigma = std::sqrt(static_cast<double>(total) * p * (1 - p));
  for (std::int64_t c : report.step_histogram) {
    CHECK(std::abs(static_cast<double>(c) - total * p) <= 3.0 * sigma);
  }
}

TEST_CASE("train: bit-identical runs under a fixed seed") {
  const Dataset ds = identity_dataset(128, 9);
  const ModelConfig mc = identity_model_config();
  TrainConfig tc = quick_train_config(77);
  tc.epochs = 5;
  tc.batch_size = 32;

  std::ostringstream log_a, log_b;
  Trainer ta(mc, tc), tb(mc, tc);
  const TrainReport ra = ta.run(ds, tc.epochs, &log_a);
  const TrainReport rb = tb.run(ds, tc.epochs, &log_b);
  CHECK(ta.model().params() == tb.model().params());
  CHECK(ra.epoch_loss_joint == rb.epoch_loss_joint);
  CHECK(ra.epoch_loss_independent == rb.epoch_loss_independent);
  CHECK(log_a.str() == log_b.str());
  CHECK(!log_a.str().empty());
}

TEST_CASE("train: resumed run continues exactly") {
  const Dataset ds = identity_dataset(128, 10);
  const ModelConfig mc = identity_model_config();
  TrainConfig tc = quick_train_config(13);
  tc.epochs = 6;
  tc.batch_size = 32;

  Trainer straight(mc, tc);
  straight.run(ds, 6);

  Trainer first_half(mc, tc);
  first_half.run(ds, 3);
  const Checkpoint mid = first_half.checkpoint();
  CHECK(mid.epochs_done == 3);
  Trainer second_half(mid, tc);
  second_half.run(ds, 6);

  CHECK(straight.model().params() == second_half.model().params());
}

TEST_CASE("train: validation errors") {
  const ModelConfig mc = identity_model_config();
  TrainConfig tc = quick_train_config(1);
  tc.batch_size = 1;
  CHECK_THROWS_AS(Trainer(mc, tc), ValidationError);

  tc.batch_size = 64;
  Trainer trainer(mc, tc);
  const Dataset tiny = identity_dataset(10, 3);
  CHECK_THROWS_AS(trainer.run(tiny, 1), ValidationError);

  // resume requires optimizer and RNG state
  Checkpoint bare;
  bare.config = mc;
  bare.params.assign(1, 0.0);
  CHECK_THROWS_AS(Trainer(bare, tc), ValidationError);
}
