#include "dbmi/reciprocal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dbmi/error.hpp"

namespace dbmi {

ReciprocalSpec::ReciprocalSpec(JointPMF j, UniformKernel k, TimeGrid g,
                               Coupling c)
    : joint(std::move(j)), kernel(k), grid(g), coupling(c) {
  if (!(kernel.space == joint.space())) {
    throw ValidationError("ReciprocalSpec: kernel/joint state space mismatch");
  }
}

ReciprocalOracle::ReciprocalOracle(JointPMF joint, UniformKernel kernel,
                                   TimeGrid grid)
    : joint_(std::move(joint)),
      kernel_(kernel),
      grid_(grid),
      num_states_(joint_.num_states()),
      m0_(joint_.marginal0()),
      m1_(joint_.marginal1()) {
  if (!(kernel_.space == joint_.space())) {
    throw ValidationError("ReciprocalOracle: state space mismatch");
  }
  states_.reserve(num_states_);
  for (std::size_t i = 0; i < num_states_; ++i) {
    states_.push_back(joint_.space().state_from_index(i));
  }
  const std::int32_t steps = grid_.num_steps();
  same_.resize(static_cast<std::size_t>(steps) + 1);
  other_.resize(static_cast<std::size_t>(steps) + 1);
  for (std::int32_t k = 0; k <= steps; ++k) {
    same_[static_cast<std::size_t>(k)] = kernel_.k_step_same(k);
    other_[static_cast<std::size_t>(k)] = kernel_.k_step_other(k);
  }
}

double ReciprocalOracle::kstep_prod(std::int32_t k, std::size_t u,
                                    std::size_t v) const {
  const State& su = states_[u];
  const State& sv = states_[v];
  const double same = same_[static_cast<std::size_t>(k)];
  const double other = other_[static_cast<std::size_t>(k)];
  double prod = 1.0;
  for (std::size_t d = 0; d < su.size(); ++d) {
    prod *= (su[d] == sv[d]) ? same : other;
  }
  return prod;
}

double ReciprocalOracle::endpoint_law(Coupling c, std::size_t a,
                                      std::size_t b) const {
  return c == Coupling::kJoint ? joint_.prob(a, b) : m0_[a] * m1_[b];
}

std::vector<double> ReciprocalOracle::endpoint_weights(Coupling c,
                                                       std::size_t a) const {
  if (m0_[a] <= 0.0) {
    throw ZeroMassError("conditioning on x0 with pi(x0) = 0");
  }
  const std::int32_t total_steps = grid_.num_steps();
  std::vector<double> w(num_states_, 0.0);
  for (std::size_t b = 0; b < num_states_; ++b) {
    const double law =
        c == Coupling::kJoint ? joint_.prob(a, b) / m0_[a] : m1_[b];
    if (law <= 0.0) continue;
    const double reach = kstep_prod(total_steps, a, b);
    if (reach <= 0.0) {
      throw InfeasibleBridgeError(
          "endpoint pair carries mass but is unreachable under the kernel");
    }
    w[b] = law / reach;
  }
  return w;
}

std::vector<double> ReciprocalOracle::h_vector(
    const std::vector<double>& weights, std::int32_t n) const {
  const std::int32_t steps_left = grid_.num_steps() - n;
  std::vector<double> h(num_states_, 0.0);
  for (std::size_t b = 0; b < num_states_; ++b) {
    const double w = weights[b];
    if (w <= 0.0) continue;
    for (std::size_t y = 0; y < num_states_; ++y) {
      h[y] += w * kstep_prod(steps_left, y, b);
    }
  }
  return h;
}

std::vector<double> ReciprocalOracle::transition(Coupling c, std::int32_t n,
                                                 std::size_t z,
                                                 std::size_t a) const {
  if (n < 1 || n > grid_.num_steps()) {
    throw ValidationError("transition: n out of [1, N+1]");
  }
  if (z >= num_states_ || a >= num_states_) {
    throw ValidationError("transition: state index out of range");
  }
  if (kstep_prod(n - 1, a, z) <= 0.0) {
    throw ZeroMassError("transition: x_prev unreachable from x0 at t_{n-1}");
  }
  const std::vector<double> w = endpoint_weights(c, a);
  const std::vector<double> h = h_vector(w, n);
  std::vector<double> t(num_states_);
  double norm = 0.0;
  for (std::size_t y = 0; y < num_states_; ++y) {
    t[y] = kstep_prod(1, z, y) * h[y];
    norm += t[y];
  }
  if (norm <= 0.0) {
    throw ZeroMassError("transition: conditioning event has zero mass");
  }
  const double inv = 1.0 / norm;
  for (double& v : t) v *= inv;
  return t;
}

double ReciprocalOracle::coupling_kl(std::int32_t n, std::size_t z,
                                     std::size_t a) const {
  const std::vector<double> tj = transition(Coupling::kJoint, n, z, a);
  const std::vector<double> ti = transition(Coupling::kIndependent, n, z, a);
  return kl_row(tj, ti);
}

double ReciprocalOracle::mi_decomposed() const {
  const std::int32_t n_inner = grid_.num_inner;
  const std::int32_t total_steps = grid_.num_steps();
  double total = 0.0;
  std::vector<double> wj(num_states_), wi(num_states_);
  // n = 0 contributes the t_0 -> t_1 transition; dropping it (as a literal
  // reading of the printed sum suggests) breaks the identity with the
  // direct formula by O(MI / N).
  for (std::int32_t n = 0; n <= n_inner; ++n) {
    for (std::size_t a = 0; a < num_states_; ++a) {
      if (m0_[a] <= 0.0) continue;
      // Unnormalized endpoint weights; pi(a) and the bridge normalizer are
      // absorbed by the final per-row normalizations.
      for (std::size_t b = 0; b < num_states_; ++b) {
        const double reach = kstep_prod(total_steps, a, b);
        const double pj = joint_.prob(a, b);
        if (pj > 0.0 && reach <= 0.0) {
          throw InfeasibleBridgeError("mass on unreachable endpoint pair");
        }
        wj[b] = pj > 0.0 ? pj / reach : 0.0;
        wi[b] = (m1_[b] > 0.0 && reach > 0.0) ? m1_[b] / reach : 0.0;
      }
      // r^joint(x0 = a, x_{t_n} = z) = Q^n(a->z) * h_n(z) with joint weights.
      const std::vector<double> h_marg = h_vector(wj, n);
      const std::vector<double> hj = h_vector(wj, n + 1);
      const std::vector<double> hi = h_vector(wi, n + 1);
      std::vector<double> tj(num_states_), ti(num_states_);
      for (std::size_t z = 0; z < num_states_; ++z) {
        const double mass = kstep_prod(n, a, z) * h_marg[z];
        if (mass <= 0.0) continue;
        double nj = 0.0, ni = 0.0;
        for (std::size_t y = 0; y < num_states_; ++y) {
          const double step = kstep_prod(1, z, y);
          tj[y] = step * hj[y];
          ti[y] = step * hi[y];
          nj += tj[y];
          ni += ti[y];
        }
        double kl = 0.0;
        for (std::size_t y = 0; y < num_states_; ++y) {
          const double p = tj[y] / nj;
          if (p > 0.0) {
            const double q = ti[y] / ni;
            if (q <= 0.0) {
              throw SupportViolationError("decomposed: transition support gap");
            }
            kl += p * std::log(p / q);
          }
        }
        total += mass * kl;
      }
    }
  }
  return total < 0.0 && total > -1e-12 ? 0.0 : total;
}

std::size_t ReciprocalOracle::path_count() const {
  std::size_t count = 1;
  for (std::int32_t i = 0; i < grid_.path_length(); ++i) {
    if (count > kPathCap / num_states_) {
      throw SizeError("path space exceeds enumeration cap");
    }
    count *= num_states_;
  }
  return count;
}

namespace {

// Lexicographic odometer over fixed-length digit strings base T.
bool advance(std::vector<std::size_t>& digits, std::size_t base) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < base) return true;
    digits[i] = 0;
  }
  return false;
}

}  // namespace

double ReciprocalOracle::path_kl() const {
  path_count();  // enforce the cap
  const std::int32_t total_steps = grid_.num_steps();
  const std::size_t t = num_states_;

  // Per-pair endpoint factors with the shared bridge normalizer folded in.
  std::vector<double> wj(t * t), wi(t * t);
  for (std::size_t a = 0; a < t; ++a) {
    for (std::size_t b = 0; b < t; ++b) {
      const double reach = kstep_prod(total_steps, a, b);
      const double pj = joint_.prob(a, b);
      const double pi = m0_[a] * m1_[b];
      if (reach <= 0.0) {
        if (pj > 0.0 || pi > 0.0) {
          throw InfeasibleBridgeError("mass on unreachable endpoint pair");
        }
        wj[a * t + b] = wi[a * t + b] = 0.0;
        continue;
      }
      wj[a * t + b] = pj / reach;
      wi[a * t + b] = pi / reach;
    }
  }
  std::vector<double> step(t * t);
  for (std::size_t u = 0; u < t; ++u) {
    for (std::size_t v = 0; v < t; ++v) {
      step[u * t + v] = kstep_prod(1, u, v);
    }
  }

  const std::size_t len = static_cast<std::size_t>(grid_.path_length());
  std::vector<std::size_t> path(len, 0);
  double kl = 0.0;
  do {
    const std::size_t a = path.front();
    const std::size_t b = path.back();
    const double fj = wj[a * t + b];
    const double fi = wi[a * t + b];
    if (fj <= 0.0 && fi <= 0.0) continue;
    double chain = 1.0;
    for (std::size_t i = 1; i < len; ++i) {
      chain *= step[path[i - 1] * t + path[i]];
      if (chain == 0.0) break;
    }
    if (chain == 0.0) continue;
    const double pj = fj * chain;
    if (pj <= 0.0) continue;
    const double pi = fi * chain;
    if (pi <= 0.0) {
      throw SupportViolationError("path_kl: joint path outside ind support");
    }
    kl += pj * std::log(pj / pi);
  } while (advance(path, t));
  return kl < 0.0 && kl > -1e-12 ? 0.0 : kl;
}

double ReciprocalOracle::markov_deviation(Coupling c) const {
  path_count();  // enforce the cap
  const std::int32_t total_steps = grid_.num_steps();
  const std::size_t t = num_states_;
  const std::size_t len = static_cast<std::size_t>(grid_.path_length());

  std::vector<double> step(t * t);
  for (std::size_t u = 0; u < t; ++u) {
    for (std::size_t v = 0; v < t; ++v) {
      step[u * t + v] = kstep_prod(1, u, v);
    }
  }

  double max_dev = 0.0;
  std::vector<double> weight(t);        // endpoint factor per b, fixed x0
  std::vector<double> pair_g(t * t);    // joint mass of (x_{t_{k-1}}, x_{t_k})
  std::vector<double> hist_f(t);        // mass of (history, x_{t_k} = y)
  std::vector<std::size_t> inner(len - 1, 0);

  for (std::size_t a = 0; a < t; ++a) {
    if (m0_[a] <= 0.0) continue;
    for (std::size_t b = 0; b < t; ++b) {
      const double law = endpoint_law(c, a, b);
      if (law <= 0.0) {
        weight[b] = 0.0;
        continue;
      }
      const double reach = kstep_prod(total_steps, a, b);
      if (reach <= 0.0) {
        throw InfeasibleBridgeError("mass on unreachable endpoint pair");
      }
      weight[b] = law / reach;
    }

    // Probability of an inner trajectory (digits are x_{t_1}..x_{t_{N+1}}).
    auto path_prob = [&](const std::vector<std::size_t>& digits) {
      const double w = weight[digits.back()];
      if (w <= 0.0) return 0.0;
      double p = w * step[a * t + digits[0]];
      for (std::size_t i = 1; i < digits.size() && p != 0.0; ++i) {
        p *= step[digits[i - 1] * t + digits[i]];
      }
      return p;
    };

    for (std::int32_t k = 1; k <= total_steps; ++k) {
      const std::size_t ki = static_cast<std::size_t>(k);
      // Pass 1: pairwise conditionals from raw sums.
      std::fill(pair_g.begin(), pair_g.end(), 0.0);
      std::fill(inner.begin(), inner.end(), 0);
      do {
        const double p = path_prob(inner);
        if (p <= 0.0) continue;
        const std::size_t z = ki >= 2 ? inner[ki - 2] : a;
        pair_g[z * t + inner[ki - 1]] += p;
      } while (advance(inner, t));

      // Pass 2: per-history conditionals; the odometer is lexicographic, so
      // equal prefixes of length k-1 are contiguous.
      std::fill(inner.begin(), inner.end(), 0);
      std::fill(hist_f.begin(), hist_f.end(), 0.0);
      std::vector<std::size_t> cur_prefix(inner.begin(),
                                          inner.begin() + (ki - 1));
      auto flush = [&](const std::vector<std::size_t>& prefix) {
        double mass = 0.0;
        for (double f : hist_f) mass += f;
        if (mass <= 0.0) return;
        const std::size_t z = prefix.empty() ? a : prefix.back();
        double gz = 0.0;
        for (std::size_t y = 0; y < t; ++y) gz += pair_g[z * t + y];
        for (std::size_t y = 0; y < t; ++y) {
          const double dev =
              std::abs(hist_f[y] / mass - pair_g[z * t + y] / gz);
          if (dev > max_dev) max_dev = dev;
        }
      };
      do {
        if (!std::equal(cur_prefix.begin(), cur_prefix.end(), inner.begin())) {
          flush(cur_prefix);
          std::fill(hist_f.begin(), hist_f.end(), 0.0);
          std::copy(inner.begin(), inner.begin() + (ki - 1),
                    cur_prefix.begin());
        }
        const double p = path_prob(inner);
        if (p > 0.0) hist_f[inner[ki - 1]] += p;
      } while (advance(inner, t));
      flush(cur_prefix);
    }
  }
  return max_dev;
}

CategoricalDist exact_transition(const ReciprocalSpec& spec, std::int32_t n,
                                 const State& x_prev, const State& x0) {
  const ReciprocalOracle oracle(spec.joint, spec.kernel, spec.grid);
  const std::size_t z = spec.joint.space().state_index(x_prev);
  const std::size_t a = spec.joint.space().state_index(x0);
  return CategoricalDist(oracle.transition(spec.coupling, n, z, a));
}

double exact_mi_decomposed(const ReciprocalSpec& spec) {
  if (spec.coupling != Coupling::kJoint) {
    throw ValidationError("exact_mi_decomposed requires the joint coupling");
  }
  return ReciprocalOracle(spec.joint, spec.kernel, spec.grid).mi_decomposed();
}

double path_space_kl(const ReciprocalSpec& spec) {
  return ReciprocalOracle(spec.joint, spec.kernel, spec.grid).path_kl();
}

double markov_property_check(const ReciprocalSpec& spec) {
  return ReciprocalOracle(spec.joint, spec.kernel, spec.grid)
      .markov_deviation(spec.coupling);
}

}  // namespace dbmi
