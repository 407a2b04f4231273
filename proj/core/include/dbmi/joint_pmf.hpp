#pragma once

#include <cstddef>
#include <vector>

#include "dbmi/rng.hpp"
#include "dbmi/state_space.hpp"

namespace dbmi {

// Explicit joint table pi(x0, x1) over pairs of S^D states, row-major with
// x0 as the row index. Only for spaces within the tabulation cap.
class JointPMF {
 public:
  // Validates: |table| = (S^D)^2, entries >= 0, total sum within 1e-12 of 1.
  JointPMF(StateSpace space, std::vector<double> table);

  const StateSpace& space() const { return space_; }
  std::size_t num_states() const { return num_states_; }

  double prob(std::size_t x0, std::size_t x1) const {
    return table_[x0 * num_states_ + x1];
  }
  const std::vector<double>& table() const { return table_; }

  std::vector<double> marginal0() const;
  std::vector<double> marginal1() const;

  // pi(x1 | x0) as a row; throws ZeroMassError when pi(x0) = 0.
  std::vector<double> conditional1(std::size_t x0) const;

  // The joint with the same marginals and no dependence.
  JointPMF product_of_marginals() const;

 private:
  StateSpace space_;
  std::size_t num_states_;
  std::vector<double> table_;
};

// I(X0; X1) = sum pi(x0,x1) ln[pi(x0,x1) / (pi(x0) pi(x1))], zero-mass terms
// contributing zero.
double exact_mi_direct(const JointPMF& joint);

// Dense random joint: i.i.d. Exp(1) entries normalized to sum 1 (uniform on
// the probability simplex).
JointPMF random_joint(const StateSpace& space, RngStream& rng);

}  // namespace dbmi
