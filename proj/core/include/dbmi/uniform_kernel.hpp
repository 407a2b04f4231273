#pragma once

#include <cstdint>
#include <vector>

#include "dbmi/categorical.hpp"
#include "dbmi/rng.hpp"
#include "dbmi/state_space.hpp"

namespace dbmi {

// Per-step reference transition: stay with probability 1-alpha, otherwise
// move uniformly over the other S-1 categories. Dimensions evolve
// independently under identical one-dimensional kernels.
//
// The one-dimensional kernel has second eigenvalue beta = 1 - alpha*S/(S-1),
// which gives the closed form
//   [Q^k]_{ij} = 1/S + beta^k (delta_ij - 1/S).
// beta may be negative (alpha > (S-1)/S); the closed form stays exact.
struct UniformKernel {
  StateSpace space;
  double alpha = 0.1;

  UniformKernel() = default;
  UniformKernel(StateSpace sp, double a);

  double beta() const {
    return 1.0 - alpha * space.num_categories / (space.num_categories - 1.0);
  }

  // [Q^k]_{ij} for i == j and i != j respectively.
  double k_step_same(std::int32_t k) const;
  double k_step_other(std::int32_t k) const;
};

// Single-step transition row out of x_prev (one dimension).
CategoricalDist step_probs(const UniformKernel& kernel, Category x_prev);

// Closed-form S x S matrix of [Q^k], row-major.
std::vector<double> k_step_matrix(const UniformKernel& kernel, std::int32_t k);

// q^ref(x_{t_n} | x_0, x_1), factorized over dimensions; n in [0, N+1].
// Per dimension, entry j is proportional to [Q^n]_{x0,j} [Q^{N+1-n}]_{j,x1}.
// Throws InfeasibleBridgeError when the endpoints are unreachable (alpha = 0
// with x0 != x1).
FactorizedDist bridge_probs(const UniformKernel& kernel, const TimeGrid& grid,
                            std::int32_t n, const State& x0, const State& x1);

// q^ref(x_{t_n} | x_{t_{n-1}}, x_1), factorized; n in [1, N+1]. Per
// dimension, entry j is proportional to Q_{x_prev,j} [Q^{N+1-n}]_{j,x1}.
FactorizedDist posterior_probs(const UniformKernel& kernel,
                               const TimeGrid& grid, std::int32_t n,
                               const State& x_prev, const State& x1);

// One-dimensional posterior row toward endpoint x1 = c; the building block
// of both posterior_probs and the model's posterior mixture.
void posterior_row_1d(const UniformKernel& kernel, std::int32_t steps_left,
                      Category x_prev, Category x1, double* out);

// All S x S posterior rows for step n packed as [x_prev][x1][j], so mixtures
// over candidate endpoints are a single inner product per dimension.
std::vector<double> posterior_tensor(const UniformKernel& kernel,
                                     const TimeGrid& grid, std::int32_t n);

// Draws each dimension independently from bridge_probs (D uniform01 draws).
// Boundary indices n = 0 and n = N+1 return the endpoint without consuming
// any draws.
State sample_bridge(const UniformKernel& kernel, const TimeGrid& grid,
                    std::int32_t n, const State& x0, const State& x1,
                    RngStream& rng);

}  // namespace dbmi
