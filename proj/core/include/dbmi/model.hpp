#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dbmi/categorical.hpp"
#include "dbmi/state_space.hpp"
#include "dbmi/uniform_kernel.hpp"

namespace dbmi {

// MLP over summed per-dimension embeddings. Each input role (x_prev, x0) has
// its own D x S table of embed_dim vectors, so the summed encoding is a
// learned linear map of the concatenated one-hots and keeps positions
// distinguishable; time enters as sinusoidal features of n/(N+1) through a
// learned projection, and the coupling flag v through a 2-row table.
struct ModelConfig {
  UniformKernel kernel;  // carries the state space and alpha
  TimeGrid grid;
  std::int32_t embed_dim = 32;
  std::vector<std::int32_t> hidden_dims = {128, 128};
  double leaky_slope = 0.01;

  // Probability floor applied after the per-dimension softmax:
  // p = (softmax + floor) / (1 + S*floor). Keeps every KL finite.
  double prob_floor = 1e-12;

  std::int32_t num_time_features() const { return 32; }
  std::int32_t output_dim() const {
    return kernel.space.num_dims * kernel.space.num_categories;
  }
};

// Named view into the flat parameter vector.
struct ParamLayout {
  struct Entry {
    std::string name;
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
    std::size_t size() const { return rows * cols; }
  };
  std::vector<Entry> entries;
  std::size_t total = 0;

  const Entry& find(const std::string& name) const;
};

// One supervision item of the bridge-matching objective. step is the TARGET
// transition index in [1, N+1]: x_prev sits at t_{step-1} (so step = 1 has
// x_prev = x0 and step = N+1 has x_prev at t_N). Covering all N+1
// transitions matches the full objective; the t_0 -> t_1 term is part of it.
struct LossTuple {
  State x_prev;
  State x0;
  State x1;
  std::int32_t step = 1;  // target step in [1, N+1]
  std::int32_t flag = 1;  // v
};

struct LossBreakdown {
  double mean = 0.0;
  double sum_independent = 0.0;  // summed per-tuple terms with v = 0
  double sum_joint = 0.0;        // v = 1
  std::size_t count_independent = 0;
  std::size_t count_joint = 0;
};

class TransitionModel {
 public:
  // Deterministic fan-in-scaled init; the output head starts at zero so the
  // initial endpoint prediction is exactly uniform.
  TransitionModel(ModelConfig config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // r~(x~1 | x_prev, x0, n, v): row-stochastic D x S endpoint prediction.
  FactorizedDist predict_endpoint(const State& x_prev, const State& x0,
                                  std::int32_t n, std::int32_t v) const;

  // Posterior mixture sum_c r~[c] q^ref(. | x_prev, c) at step n; equals
  // predict_endpoint at n = N+1. Row-stochastic for any parameter values.
  FactorizedDist transition_probs(const State& x_prev, const State& x0,
                                  std::int32_t n, std::int32_t v) const;

  // Mean over tuples of the bridge-matching term: KL toward the reference
  // posterior at the target step when step <= N, negative log-likelihood of
  // x1 when step = N+1, plus lambda_ce times the endpoint cross-entropy.
  LossBreakdown loss(std::span<const LossTuple> tuples,
                     double lambda_ce = 0.0) const;

  // Same, accumulating the exact reverse-mode gradient of the mean into
  // grad (resized to the parameter count). Chunked fixed-order reduction:
  // identical output for any DBMI_THREADS.
  LossBreakdown loss_and_grad(std::span<const LossTuple> tuples,
                              double lambda_ce,
                              std::vector<double>& grad) const;

 private:
  struct Workspace;

  ModelConfig config_;
  ParamLayout layout_;
  std::vector<double> params_;
  // posterior_tensor per step n = 1..N ([x_prev][endpoint][next], S^3 each).
  std::vector<std::vector<double>> posterior_cache_;

  void forward_endpoint(const State& x_prev, const State& x0, std::int32_t n,
                        std::int32_t v, Workspace& ws) const;
  void mix_transition(const State& x_prev, std::int32_t n,
                      Workspace& ws) const;
  double tuple_loss_and_grad(const LossTuple& tuple, double lambda_ce,
                             Workspace& ws, double* grad) const;
  void backward(const State& x_prev, const State& x0, std::int32_t n,
                std::int32_t v, Workspace& ws, double* grad) const;
  LossBreakdown loss_impl(std::span<const LossTuple> tuples, double lambda_ce,
                          std::vector<double>* grad) const;
};

}  // namespace dbmi
