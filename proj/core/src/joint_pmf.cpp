#include "dbmi/joint_pmf.hpp"

#include <cmath>
#include <string>

#include "dbmi/error.hpp"

namespace dbmi {

JointPMF::JointPMF(StateSpace space, std::vector<double> table)
    : space_(space), num_states_(space.table_size()), table_(std::move(table)) {
  if (table_.size() != num_states_ * num_states_) {
    throw ValidationError("JointPMF: table size must be (S^D)^2");
  }
  double sum = 0.0;
  for (double p : table_) {
    if (!(p >= 0.0)) {
      throw ValidationError("JointPMF: negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ValidationError("JointPMF: total mass " + std::to_string(sum));
  }
}

std::vector<double> JointPMF::marginal0() const {
  std::vector<double> m(num_states_, 0.0);
  for (std::size_t a = 0; a < num_states_; ++a) {
    for (std::size_t b = 0; b < num_states_; ++b) {
      m[a] += prob(a, b);
    }
  }
  return m;
}

std::vector<double> JointPMF::marginal1() const {
  std::vector<double> m(num_states_, 0.0);
  for (std::size_t a = 0; a < num_states_; ++a) {
    for (std::size_t b = 0; b < num_states_; ++b) {
      m[b] += prob(a, b);
    }
  }
  return m;
}

std::vector<double> JointPMF::conditional1(std::size_t x0) const {
  std::vector<double> row(num_states_);
  double mass = 0.0;
  for (std::size_t b = 0; b < num_states_; ++b) {
    row[b] = prob(x0, b);
    mass += row[b];
  }
  if (mass <= 0.0) {
    throw ZeroMassError("conditional1: pi(x0) = 0");
  }
  for (double& p : row) p /= mass;
  return row;
}

JointPMF JointPMF::product_of_marginals() const {
  const std::vector<double> m0 = marginal0();
  const std::vector<double> m1 = marginal1();
  std::vector<double> t(num_states_ * num_states_);
  double sum = 0.0;
  for (std::size_t a = 0; a < num_states_; ++a) {
    for (std::size_t b = 0; b < num_states_; ++b) {
      t[a * num_states_ + b] = m0[a] * m1[b];
      sum += t[a * num_states_ + b];
    }
  }
  // Renormalize away accumulated rounding so the constructor's mass check
  // stays meaningful.
  for (double& p : t) p /= sum;
  return JointPMF(space_, std::move(t));
}

double exact_mi_direct(const JointPMF& joint) {
  const std::vector<double> m0 = joint.marginal0();
  const std::vector<double> m1 = joint.marginal1();
  const std::size_t n = joint.num_states();
  double mi = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double p = joint.prob(a, b);
      if (p > 0.0) {
        mi += p * std::log(p / (m0[a] * m1[b]));
      }
    }
  }
  return mi < 0.0 && mi > -1e-13 ? 0.0 : mi;
}

JointPMF random_joint(const StateSpace& space, RngStream& rng) {
  const std::size_t n = space.table_size();
  std::vector<double> t(n * n);
  double sum = 0.0;
  for (double& p : t) {
    // Exp(1) via inverse CDF; uniform01 () is in [0, 1) so the argument of
    // log stays positive.
    p = -std::log(1.0 - rng.uniform01());
    sum += p;
  }
  for (double& p : t) p /= sum;
  return JointPMF(space, std::move(t));
}

}  // namespace dbmi
