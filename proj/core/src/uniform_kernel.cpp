#include "dbmi/uniform_kernel.hpp"

#include <cmath>
#include <string>

#include "dbmi/error.hpp"

namespace dbmi {

namespace {

// Exact integer power by squaring; std::pow is avoided so negative bases and
// platform libm differences cannot perturb bit-level reproducibility.
double ipow(double base, std::int32_t k) {
  double result = 1.0;
  double acc = base;
  while (k > 0) {
    if (k & 1) result *= acc;
    acc *= acc;
    k >>= 1;
  }
  return result;
}

double clamp_nonneg(double v) {
  return (v < 0.0 && v > -1e-15) ? 0.0 : v;
}

}  // namespace

UniformKernel::UniformKernel(StateSpace sp, double a) : space(sp), alpha(a) {
  if (!(a >= 0.0 && a <= 1.0)) {
    throw ValidationError("UniformKernel: alpha must be in [0, 1]");
  }
}

double UniformKernel::k_step_same(std::int32_t k) const {
  const double s = space.num_categories;
  return clamp_nonneg(1.0 / s + ipow(beta(), k) * (1.0 - 1.0 / s));
}

double UniformKernel::k_step_other(std::int32_t k) const {
  const double s = space.num_categories;
  return clamp_nonneg((1.0 - ipow(beta(), k)) / s);
}

CategoricalDist step_probs(const UniformKernel& kernel, Category x_prev) {
  const std::int32_t s = kernel.space.num_categories;
  if (x_prev < 0 || x_prev >= s) {
    throw ValidationError("step_probs: category out of range");
  }
  std::vector<double> row(static_cast<std::size_t>(s),
                          kernel.alpha / (s - 1.0));
  row[static_cast<std::size_t>(x_prev)] = 1.0 - kernel.alpha;
  return CategoricalDist(std::move(row));
}

std::vector<double> k_step_matrix(const UniformKernel& kernel,
                                  std::int32_t k) {
  if (k < 0) {
    throw ValidationError("k_step_matrix: k must be >= 0");
  }
  const std::size_t s = static_cast<std::size_t>(kernel.space.num_categories);
  const double same = kernel.k_step_same(k);
  const double other = kernel.k_step_other(k);
  std::vector<double> m(s * s, other);
  for (std::size_t i = 0; i < s; ++i) {
    m[i * s + i] = same;
  }
  return m;
}

namespace {

// Shared core of bridge/posterior rows: entry j proportional to
// left(j) * [Q^k2]_{j, x1}, where left is either [Q^k1]_{x0, .} or Q_{x_prev, .}.
void endpoint_weighted_row(const UniformKernel& kernel, std::int32_t k_left,
                           Category from, std::int32_t k_right, Category to,
                           double* out) {
  const std::int32_t s = kernel.space.num_categories;
  const double l_same = kernel.k_step_same(k_left);
  const double l_other = kernel.k_step_other(k_left);
  const double r_same = kernel.k_step_same(k_right);
  const double r_other = kernel.k_step_other(k_right);
  double norm = 0.0;
  for (Category j = 0; j < s; ++j) {
    const double left = (j == from) ? l_same : l_other;
    const double right = (j == to) ? r_same : r_other;
    out[j] = left * right;
    norm += out[j];
  }
  if (norm <= 0.0) {
    throw InfeasibleBridgeError(
        "endpoint pair unreachable under reference kernel (alpha = 0 with "
        "distinct endpoints)");
  }
  const double inv = 1.0 / norm;
  for (Category j = 0; j < s; ++j) out[j] *= inv;
}

}  // namespace

FactorizedDist bridge_probs(const UniformKernel& kernel, const TimeGrid& grid,
                            std::int32_t n, const State& x0, const State& x1) {
  kernel.space.require_valid(x0);
  kernel.space.require_valid(x1);
  if (n < 0 || n > grid.num_steps()) {
    throw ValidationError("bridge_probs: n out of [0, N+1]");
  }
  const std::int32_t d = kernel.space.num_dims;
  const std::int32_t s = kernel.space.num_categories;
  std::vector<double> data(static_cast<std::size_t>(d) * s);
  for (std::int32_t dim = 0; dim < d; ++dim) {
    endpoint_weighted_row(kernel, n, x0[static_cast<std::size_t>(dim)],
                          grid.num_steps() - n,
                          x1[static_cast<std::size_t>(dim)],
                          data.data() + static_cast<std::size_t>(dim) * s);
  }
  return FactorizedDist(d, s, std::move(data));
}

FactorizedDist posterior_probs(const UniformKernel& kernel,
                               const TimeGrid& grid, std::int32_t n,
                               const State& x_prev, const State& x1) {
  kernel.space.require_valid(x_prev);
  kernel.space.require_valid(x1);
  if (n < 1 || n > grid.num_steps()) {
    throw ValidationError("posterior_probs: n out of [1, N+1]");
  }
  const std::int32_t d = kernel.space.num_dims;
  const std::int32_t s = kernel.space.num_categories;
  std::vector<double> data(static_cast<std::size_t>(d) * s);
  for (std::int32_t dim = 0; dim < d; ++dim) {
    endpoint_weighted_row(kernel, 1, x_prev[static_cast<std::size_t>(dim)],
                          grid.num_steps() - n,
                          x1[static_cast<std::size_t>(dim)],
                          data.data() + static_cast<std::size_t>(dim) * s);
  }
  return FactorizedDist(d, s, std::move(data));
}

void posterior_row_1d(const UniformKernel& kernel, std::int32_t steps_left,
                      Category x_prev, Category x1, double* out) {
  endpoint_weighted_row(kernel, 1, x_prev, steps_left, x1, out);
}

std::vector<double> posterior_tensor(const UniformKernel& kernel,
                                     const TimeGrid& grid, std::int32_t n) {
  if (n < 1 || n > grid.num_steps()) {
    throw ValidationError("posterior_tensor: n out of [1, N+1]");
  }
  const std::size_t s = static_cast<std::size_t>(kernel.space.num_categories);
  const std::int32_t steps_left = grid.num_steps() - n;
  std::vector<double> t(s * s * s);
  for (std::size_t z = 0; z < s; ++z) {
    for (std::size_t c = 0; c < s; ++c) {
      posterior_row_1d(kernel, steps_left, static_cast<Category>(z),
                       static_cast<Category>(c), t.data() + (z * s + c) * s);
    }
  }
  return t;
}

State sample_bridge(const UniformKernel& kernel, const TimeGrid& grid,
                    std::int32_t n, const State& x0, const State& x1,
                    RngStream& rng) {
  if (n == 0) {
    kernel.space.require_valid(x0);
    return x0;
  }
  if (n == grid.num_steps()) {
    kernel.space.require_valid(x1);
    return x1;
  }
  return sample_factorized(bridge_probs(kernel, grid, n, x0, x1), rng);
}

}  // namespace dbmi
