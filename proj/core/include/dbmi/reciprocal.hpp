#pragma once

#include <cstdint>
#include <vector>

#include "dbmi/categorical.hpp"
#include "dbmi/coupling.hpp"
#include "dbmi/joint_pmf.hpp"
#include "dbmi/state_space.hpp"
#include "dbmi/uniform_kernel.hpp"

namespace dbmi {

// A reciprocal process pinned down by its endpoint coupling and reference
// kernel: q^ref(x_in | x0, x1) glued to either pi(x0, x1) or pi(x0) pi(x1).
struct ReciprocalSpec {
  JointPMF joint;
  UniformKernel kernel;
  TimeGrid grid;
  Coupling coupling = Coupling::kJoint;

  ReciprocalSpec(JointPMF j, UniformKernel k, TimeGrid g,
                 Coupling c = Coupling::kJoint);
};

// Exact tabular computations on the reciprocal pair (joint / independent)
// built from one endpoint table. All quantities are derived from the
// identity
//
//   r(x_{t_n} = y | x_{t_{n-1}} = z, x_0 = a)
//     = Q(z -> y) * h_n(y) / normalizer,
//   h_n(y) = sum_b  w(b | a) / Q^{N+1}(a -> b) * Q^{N+1-n}(y -> b),
//
// i.e. the endpoint law conditioned on the evidence (x_0, x_{t_{n-1}});
// the plain mixture of posteriors weighted by pi(x1 | x0) alone is not the
// conditional of the process, and path enumeration is the arbiter.
class ReciprocalOracle {
 public:
  ReciprocalOracle(JointPMF joint, UniformKernel kernel, TimeGrid grid);

  const JointPMF& joint() const { return joint_; }
  const UniformKernel& kernel() const { return kernel_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t num_states() const { return num_states_; }

  // r(x_{t_n} = . | x_{t_{n-1}} = z, x_0 = a) for the given coupling, as a
  // dense length-S^D vector. n in [1, N+1]. Throws ZeroMassError when the
  // conditioning event has zero probability.
  std::vector<double> transition(Coupling c, std::int32_t n, std::size_t z,
                                 std::size_t a) const;

  // KL( r^joint(.|z,a) || r^ind(.|z,a) ) at step n, in nats.
  double coupling_kl(std::int32_t n, std::size_t z, std::size_t a) const;

  // Exact value of the step-wise decomposition
  //   sum_{n=0}^{N} E_{r^joint(x0, x_{t_n})}
  //     KL( r^joint(x_{t_{n+1}}|x_{t_n},x0) || r^ind(x_{t_{n+1}}|x_{t_n},x0) ),
  // i.e. the KL chain rule over all N+1 transitions of the conditioned
  // Markov chains; equals the direct MI and the path-space KL.
  double mi_decomposed() const;

  // KL between the two processes by full trajectory enumeration.
  // Requires (S^D)^(N+2) <= kPathCap.
  double path_kl() const;

  // Brute-force Prop.-1 deviation for the chosen coupling: max over positive
  // probability histories of
  //   | r(x_{t_k}|x_{t_1:t_{k-1}},x0) - r(x_{t_k}|x_{t_{k-1}},x0) |,
  // both conditionals accumulated from raw path sums.
  double markov_deviation(Coupling c) const;

  std::size_t path_count() const;  // throws SizeError above kPathCap

  static constexpr std::size_t kPathCap = std::size_t{1} << 24;

 private:
  JointPMF joint_;
  UniformKernel kernel_;
  TimeGrid grid_;
  std::size_t num_states_;
  std::vector<State> states_;
  std::vector<double> same_;   // [Q^k] diagonal entry, k = 0..N+1
  std::vector<double> other_;  // [Q^k] off-diagonal entry
  std::vector<double> m0_;
  std::vector<double> m1_;

  // Product over dimensions of [Q^k]_{u_d, v_d}.
  double kstep_prod(std::int32_t k, std::size_t u, std::size_t v) const;
  // Endpoint weight with the reachability divisor folded in:
  //   w(b|a) / Q^{N+1}(a->b); throws InfeasibleBridgeError on 0 divisors
  //   carrying mass.
  std::vector<double> endpoint_weights(Coupling c, std::size_t a) const;
  // h_n(y) for the given endpoint weights.
  std::vector<double> h_vector(const std::vector<double>& weights,
                               std::int32_t n) const;
  double endpoint_law(Coupling c, std::size_t a, std::size_t b) const;
};

// Spec-level entry points.

// Distribution of x_{t_n} given (x_{t_{n-1}}, x_0) under spec.coupling, over
// the full product space.
CategoricalDist exact_transition(const ReciprocalSpec& spec, std::int32_t n,
                                 const State& x_prev, const State& x0);

// Exact MI via the step-wise decomposition; requires coupling = joint.
double exact_mi_decomposed(const ReciprocalSpec& spec);

// KL(r^joint || r^ind) over path space for spec.joint's coupling pair.
double path_space_kl(const ReciprocalSpec& spec);

// Max Markov-property deviation of the conditioned process (spec.coupling).
double markov_property_check(const ReciprocalSpec& spec);

}  // namespace dbmi
