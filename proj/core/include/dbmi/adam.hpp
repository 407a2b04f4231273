#pragma once

#include <cstdint>
#include <vector>

namespace dbmi {

// Adaptive-moment optimizer state; shapes mirror the flat parameter vector.
struct AdamState {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t param_count, double lr = 3e-4)
      : learning_rate(lr),
        m(param_count, 0.0),
        v(param_count, 0.0) {}
  AdamState() = default;
};

// One bias-corrected update in place; deterministic.
void adam_step(std::vector<double>& params, AdamState& state,
               const std::vector<double>& grad);

}  // namespace dbmi
