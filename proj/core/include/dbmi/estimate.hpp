#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dbmi/dataset.hpp"
#include "dbmi/model.hpp"
#include "dbmi/reciprocal.hpp"

namespace dbmi {

struct MIEstimate {
  double value = 0.0;      // nats
  double std_error = 0.0;  // MC standard error across outer samples
  bool std_error_defined = true;
  std::int64_t outer = 0;  // K
  std::int32_t inner = 0;  // M
  std::int32_t n_steps = 0;
  std::uint64_t seed = 0;
  std::string estimator;  // dbmi | dbmi-oracle | plugin
  std::int64_t flagged_terms = 0;
};

// Supplier of KL(r(.|x_prev,x0,v=1) || r(.|x_prev,x0,v=0)) at one step.
class TransitionSource {
 public:
  virtual ~TransitionSource() = default;
  virtual double coupling_kl(const State& x_prev, const State& x0,
                             std::int32_t n) const = 0;
  virtual const UniformKernel& kernel() const = 0;
  virtual const TimeGrid& grid() const = 0;
  virtual std::string tag() const = 0;
};

// Neural transitions; the factorized per-dimension KL closed form applies
// because both predicted transitions are products. The model's probability
// floor rules out support violations.
class ModelTransitionSource : public TransitionSource {
 public:
  explicit ModelTransitionSource(const TransitionModel& model)
      : model_(&model) {}
  double coupling_kl(const State& x_prev, const State& x0,
                     std::int32_t n) const override;
  const UniformKernel& kernel() const override {
    return model_->config().kernel;
  }
  const TimeGrid& grid() const override { return model_->config().grid; }
  std::string tag() const override { return "dbmi"; }

 private:
  const TransitionModel* model_;
};

// Exact tabular transitions; KL is taken over the full product space since
// exact conditionals need not factorize.
class OracleTransitionSource : public TransitionSource {
 public:
  OracleTransitionSource(JointPMF joint, UniformKernel kernel, TimeGrid grid);
  double coupling_kl(const State& x_prev, const State& x0,
                     std::int32_t n) const override;
  const UniformKernel& kernel() const override { return oracle_.kernel(); }
  const TimeGrid& grid() const override { return oracle_.grid(); }
  std::string tag() const override { return "dbmi-oracle"; }
  const ReciprocalOracle& oracle() const { return oracle_; }

 private:
  ReciprocalOracle oracle_;
};

struct EstimateOptions {
  // Multiply the sample mean by the transition count N+1: uniform step
  // sampling estimates the mean over transitions while the decomposition
  // sums over them. Disabling this is a regression hook; it biases the
  // estimate low by exactly that factor.
  bool scale_by_step_count = true;
};

// Monte-Carlo estimate from K outer draws (dataset pairs with replacement,
// a uniform target step over all N+1 transitions, M bridge samples from the
// joint-coupling bridge one index earlier) of the coupling KL at that step.
// Per-outer-sample substreams make the result independent of the worker
// count. Terms whose KL has a support violation are flagged and dropped; an
// all-flagged batch is an error.
MIEstimate estimate_dbmi(const TransitionSource& source, const Dataset& dataset,
                         std::size_t outer, std::size_t inner,
                         std::uint64_t seed,
                         const EstimateOptions& options = {});

// Non-parametric plug-in: MI of the empirical joint/marginal PMFs. Always
// bounded above by ln(dataset size).
MIEstimate estimate_plugin(const Dataset& dataset);

// Grid of estimates for studying K/M trade-offs.
std::vector<MIEstimate> mc_convergence_scan(const TransitionSource& source,
                                            const Dataset& dataset,
                                            const std::vector<std::size_t>& ks,
                                            const std::vector<std::size_t>& ms,
                                            std::uint64_t seed);

// Ancestral rollout of the learned chain from x0 through all N+1 steps;
// returns the generated endpoint.
State ancestral_rollout(const TransitionModel& model, const State& x0,
                        std::int32_t v, RngStream& rng);

}  // namespace dbmi
