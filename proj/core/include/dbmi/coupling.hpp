#pragma once

#include <cstdint>
#include <vector>

#include "dbmi/rng.hpp"
#include "dbmi/state_space.hpp"

namespace dbmi {

// Endpoint coupling selector; doubles as the model's binary flag v
// (independent = 0, joint = 1).
enum class Coupling : std::int32_t {
  kIndependent = 0,
  kJoint = 1,
};

// K endpoint pairs plus the coupling they were drawn from.
struct PairBatch {
  std::vector<State> x0;
  std::vector<State> x1;
  Coupling coupling = Coupling::kJoint;

  std::size_t size() const { return x0.size(); }
};

// Uniform random derangement of {0, ..., n-1} (no index maps to itself),
// by rejection over uniform shuffles; n >= 2. Draw count is unbounded with
// geometrically decaying tail (mean < e shuffles).
std::vector<std::size_t> random_derangement(std::size_t n, RngStream& rng);

// Rearranges x1 by a uniform random derangement, keeping x0 fixed, and marks
// the batch independent. Requires K >= 2.
PairBatch permute_coupling(const PairBatch& batch, RngStream& rng);

}  // namespace dbmi
