#include "dbmi/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dbmi/error.hpp"
#include "dbmi/parallel.hpp"
#include "dbmi/rng.hpp"
#include "dbmi/uniform_kernel.hpp"

namespace dbmi {

double ModelTransitionSource::coupling_kl(const State& x_prev, const State& x0,
                                          std::int32_t n) const {
  const FactorizedDist joint = model_->transition_probs(x_prev, x0, n, 1);
  const FactorizedDist indep = model_->transition_probs(x_prev, x0, n, 0);
  return kl_categorical(joint, indep);
}

OracleTransitionSource::OracleTransitionSource(JointPMF joint,
                                               UniformKernel kernel,
                                               TimeGrid grid)
    : oracle_(std::move(joint), kernel, grid) {}

double OracleTransitionSource::coupling_kl(const State& x_prev,
                                           const State& x0,
                                           std::int32_t n) const {
  const std::size_t z = oracle_.joint().space().state_index(x_prev);
  const std::size_t a = oracle_.joint().space().state_index(x0);
  return oracle_.coupling_kl(n, z, a);
}

MIEstimate estimate_dbmi(const TransitionSource& source,
                         const Dataset& dataset, std::size_t outer,
                         std::size_t inner, std::uint64_t seed,
                         const EstimateOptions& options) {
  if (dataset.size() == 0) {
    throw ValidationError("estimate: empty dataset");
  }
  if (dataset.size() < outer) {
    throw ValidationError("estimate: dataset smaller than K");
  }
  if (outer < 1 || inner < 1) {
    throw ValidationError("estimate: K and M must be >= 1");
  }
  if (!(dataset.space == source.kernel().space)) {
    throw ValidationError("estimate: dataset/source state space mismatch");
  }
  const UniformKernel& kernel = source.kernel();
  const TimeGrid& grid = source.grid();
  const std::int32_t n_inner = grid.num_inner;

  // Per-outer-sample means; filled independently, reduced in fixed order.
  std::vector<double> sample_mean(outer, 0.0);
  std::vector<std::uint8_t> dropped(outer, 0);
  std::vector<std::int64_t> flags(outer, 0);
  std::vector<std::exception_ptr> errors(num_chunks(outer, 256));

  parallel_chunks(outer, 256, [&](std::size_t begin, std::size_t end,
                                  std::size_t chunk) {
    try {
      for (std::size_t k = begin; k < end; ++k) {
        RngStream rng(substream_seed(seed, k));
        const std::size_t idx = rng.uniform_below(dataset.size());
        const State& x0 = dataset.x0[idx];
        const State& x1 = dataset.x1[idx];
        // target step over all N+1 transitions; x_prev from the joint
        // bridge one index earlier
        const std::int32_t step =
            1 + static_cast<std::int32_t>(rng.uniform_below(
                    static_cast<std::uint64_t>(grid.num_steps())));
        double sum = 0.0;
        std::size_t kept = 0;
        for (std::size_t rep = 0; rep < inner; ++rep) {
          const State x_prev =
              sample_bridge(kernel, grid, step - 1, x0, x1, rng);
          try {
            sum += source.coupling_kl(x_prev, x0, step);
            ++kept;
          } catch (const SupportViolationError&) {
            ++flags[k];
          }
        }
        if (kept == 0) {
          dropped[k] = 1;
        } else {
          sample_mean[k] = sum / static_cast<double>(kept);
        }
      }
    } catch (...) {
      errors[chunk] = std::current_exception();
    }
  });
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  double sum = 0.0;
  std::size_t kept_outer = 0;
  std::int64_t flagged = 0;
  for (std::size_t k = 0; k < outer; ++k) {
    flagged += flags[k];
    if (dropped[k]) continue;
    sum += sample_mean[k];
    ++kept_outer;
  }
  if (kept_outer == 0) {
    throw SupportViolationError("estimate: every term had a support violation");
  }
  // Uniform step sampling estimates the mean over the N+1 transitions; the
  // decomposition sums over them, hence the factor.
  const double scale =
      options.scale_by_step_count ? static_cast<double>(grid.num_steps()) : 1.0;
  const double mean = sum / static_cast<double>(kept_outer);

  MIEstimate est;
  est.value = scale * mean;
  est.outer = static_cast<std::int64_t>(outer);
  est.inner = static_cast<std::int32_t>(inner);
  est.n_steps = n_inner;
  est.seed = seed;
  est.estimator = source.tag();
  est.flagged_terms = flagged;
  if (kept_outer >= 2) {
    double ss = 0.0;
    for (std::size_t k = 0; k < outer; ++k) {
      if (dropped[k]) continue;
      const double d = sample_mean[k] - mean;
      ss += d * d;
    }
    const double var = ss / static_cast<double>(kept_outer - 1);
    est.std_error =
        scale * std::sqrt(var / static_cast<double>(kept_outer));
    est.std_error_defined = true;
  } else {
    est.std_error = 0.0;
    est.std_error_defined = false;
  }
  return est;
}

MIEstimate estimate_plugin(const Dataset& dataset) {
  const std::size_t n = dataset.size();
  if (n == 0) {
    throw ValidationError("plugin: empty dataset");
  }
  std::map<std::pair<State, State>, std::size_t> joint;
  std::map<State, std::size_t> m0, m1;
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[{dataset.x0[i], dataset.x1[i]}];
    ++m0[dataset.x0[i]];
    ++m1[dataset.x1[i]];
  }
  const double dn = static_cast<double>(n);
  double mi = 0.0;
  for (const auto& [pair, count] : joint) {
    const double p = static_cast<double>(count) / dn;
    const double p0 = static_cast<double>(m0.at(pair.first)) / dn;
    const double p1 = static_cast<double>(m1.at(pair.second)) / dn;
    mi += p * std::log(p / (p0 * p1));
  }
  if (mi < 0.0 && mi > -1e-12) mi = 0.0;

  MIEstimate est;
  est.value = mi;
  est.std_error = 0.0;
  est.std_error_defined = false;
  est.outer = static_cast<std::int64_t>(n);
  est.inner = 0;
  est.n_steps = 0;
  est.seed = 0;
  est.estimator = "plugin";
  return est;
}

std::vector<MIEstimate> mc_convergence_scan(const TransitionSource& source,
                                            const Dataset& dataset,
                                            const std::vector<std::size_t>& ks,
                                            const std::vector<std::size_t>& ms,
                                            std::uint64_t seed) {
  std::vector<MIEstimate> grid;
  grid.reserve(ks.size() * ms.size());
  std::uint64_t cell = 0;
  for (std::size_t k : ks) {
    for (std::size_t m : ms) {
      grid.push_back(
          estimate_dbmi(source, dataset, k, m, substream_seed(seed, cell)));
      ++cell;
    }
  }
  return grid;
}

State ancestral_rollout(const TransitionModel& model, const State& x0,
                        std::int32_t v, RngStream& rng) {
  State x = x0;
  const std::int32_t steps = model.config().grid.num_steps();
  for (std::int32_t n = 1; n <= steps; ++n) {
    const FactorizedDist t = model.transition_probs(x, x0, n, v);
    x = sample_factorized(t, rng);
  }
  return x;
}

}  // namespace dbmi
