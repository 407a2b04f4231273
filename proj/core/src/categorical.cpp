#include "dbmi/categorical.hpp"

#include <cmath>
#include <string>

#include "dbmi/error.hpp"

namespace dbmi {

void validate_prob_row(std::span<const double> row, double tol) {
  if (row.empty()) {
    throw ValidationError("empty probability row");
  }
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0)) {  // also rejects NaN
      throw ValidationError("negative or non-finite probability entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw ValidationError("probability row sums to " + std::to_string(sum) +
                          ", off by more than " + std::to_string(tol));
  }
}

CategoricalDist::CategoricalDist(std::vector<double> probs, double tol)
    : probs_(std::move(probs)) {
  validate_prob_row(probs_, tol);
}

CategoricalDist CategoricalDist::point_mass(Category index, std::int32_t size) {
  if (index < 0 || index >= size) {
    throw ValidationError("point_mass: index out of range");
  }
  std::vector<double> p(static_cast<std::size_t>(size), 0.0);
  p[static_cast<std::size_t>(index)] = 1.0;
  return CategoricalDist(std::move(p));
}

FactorizedDist::FactorizedDist(std::int32_t dims, std::int32_t cats,
                               std::vector<double> data, double tol)
    : dims_(dims), cats_(cats), data_(std::move(data)) {
  if (dims < 1 || cats < 2 ||
      data_.size() != static_cast<std::size_t>(dims) * cats) {
    throw ValidationError("FactorizedDist: bad shape");
  }
  for (std::int32_t d = 0; d < dims_; ++d) {
    validate_prob_row(row(d), tol);
  }
}

double kl_row(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ValidationError("kl: size mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) {
        throw SupportViolationError("kl: p > 0 where q = 0, divergence infinite");
      }
      kl += p[i] * std::log(p[i] / q[i]);
    }
  }
  // Rounding can push a near-zero KL a hair negative.
  return kl < 0.0 && kl > -1e-13 ? 0.0 : kl;
}

double kl_categorical(const CategoricalDist& p, const CategoricalDist& q) {
  return kl_row(p.probs(), q.probs());
}

double kl_categorical(const FactorizedDist& p, const FactorizedDist& q) {
  if (p.dims() != q.dims() || p.cats() != q.cats()) {
    throw ValidationError("kl: factorized shape mismatch");
  }
  double kl = 0.0;
  for (std::int32_t d = 0; d < p.dims(); ++d) {
    kl += kl_row(p.row(d), q.row(d));
  }
  return kl;
}

Category sample_row(std::span<const double> row, RngStream& rng) {
  const double u = rng.uniform01();
  double cdf = 0.0;
  for (std::size_t i = 0; i + 1 < row.size(); ++i) {
    cdf += row[i];
    if (u < cdf) return static_cast<Category>(i);
  }
  return static_cast<Category>(row.size() - 1);
}

Category categorical_sample(const CategoricalDist& dist, RngStream& rng) {
  validate_prob_row(dist.probs(), kSampleSumTol);
  return sample_row(dist.probs(), rng);
}

State sample_factorized(const FactorizedDist& dist, RngStream& rng) {
  State x(static_cast<std::size_t>(dist.dims()));
  for (std::int32_t d = 0; d < dist.dims(); ++d) {
    x[static_cast<std::size_t>(d)] = sample_row(dist.row(d), rng);
  }
  return x;
}

}  // namespace dbmi
