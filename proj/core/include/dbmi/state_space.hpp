#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dbmi {

using Category = std::int32_t;
// One point of S^D: exactly D categories, each in {0, ..., S-1}.
using State = std::vector<Category>;

// The product space S^D. Categories are 0-based internally.
struct StateSpace {
  std::int32_t num_categories = 2;  // S
  std::int32_t num_dims = 1;        // D

  StateSpace() = default;
  StateSpace(std::int32_t s, std::int32_t d);

  bool contains(const State& x) const;
  void require_valid(const State& x) const;

  // |S^D| as a size_t; throws SizeError above the tabulation cap.
  std::size_t table_size(std::size_t cap = kTableCap) const;

  // Row-major packing of a state into a table index, dimension 0 most
  // significant; inverse of state_from_index.
  std::size_t state_index(const State& x) const;
  State state_from_index(std::size_t index) const;

  bool operator==(const StateSpace&) const = default;

  static constexpr std::size_t kTableCap = 4096;
};

// Uniform integer index grid over [0, 1]: inner points t_1..t_N plus the two
// endpoints, so trajectories have N+2 entries and N+1 steps.
struct TimeGrid {
  std::int32_t num_inner = 1;  // N

  TimeGrid() = default;
  explicit TimeGrid(std::int32_t n);

  std::int32_t num_steps() const { return num_inner + 1; }      // N+1
  std::int32_t path_length() const { return num_inner + 2; }    // N+2

  bool operator==(const TimeGrid&) const = default;
};

}  // namespace dbmi
