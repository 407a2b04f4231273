#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dbmi/rng.hpp"
#include "dbmi/state_space.hpp"

namespace dbmi {

// Sum tolerance for row-stochastic validation of distributions we construct.
inline constexpr double kRowSumTol = 1e-12;
// Looser gate applied to caller-supplied distributions before sampling.
inline constexpr double kSampleSumTol = 1e-9;

// A single categorical distribution over S categories.
class CategoricalDist {
 public:
  // Validates: entries >= 0, sum within tol of 1.
  explicit CategoricalDist(std::vector<double> probs, double tol = kRowSumTol);

  static CategoricalDist point_mass(Category index, std::int32_t size);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Product distribution over S^D stored as a row-major D x S matrix; row d is
// the marginal of dimension d.
class FactorizedDist {
 public:
  FactorizedDist(std::int32_t dims, std::int32_t cats,
                 std::vector<double> data, double tol = kRowSumTol);

  std::int32_t dims() const { return dims_; }
  std::int32_t cats() const { return cats_; }
  std::span<const double> row(std::int32_t d) const {
    return {data_.data() + static_cast<std::size_t>(d) * cats_,
            static_cast<std::size_t>(cats_)};
  }
  double at(std::int32_t d, Category c) const {
    return data_[static_cast<std::size_t>(d) * cats_ +
                 static_cast<std::size_t>(c)];
  }
  const std::vector<double>& data() const { return data_; }

 private:
  std::int32_t dims_;
  std::int32_t cats_;
  std::vector<double> data_;
};

// Throws ValidationError unless row is a probability vector.
void validate_prob_row(std::span<const double> row, double tol);

// KL(p || q) in nats with the 0 ln(0/q) = 0 convention. Throws
// SupportViolationError when p_i > 0 and q_i = 0.
double kl_categorical(const CategoricalDist& p, const CategoricalDist& q);
double kl_row(std::span<const double> p, std::span<const double> q);

// Sum of per-dimension KLs; equals the KL of the product distributions.
double kl_categorical(const FactorizedDist& p, const FactorizedDist& q);

// Inverse-CDF sample; consumes exactly one uniform01 draw.
Category categorical_sample(const CategoricalDist& dist, RngStream& rng);
// Non-validating hot path used where the row is produced internally.
Category sample_row(std::span<const double> row, RngStream& rng);

// One independent draw per dimension, in dimension order (D uniform01 draws).
State sample_factorized(const FactorizedDist& dist, RngStream& rng);

}  // namespace dbmi
