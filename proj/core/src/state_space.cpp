#include "dbmi/state_space.hpp"

#include <string>

#include "dbmi/error.hpp"

namespace dbmi {

StateSpace::StateSpace(std::int32_t s, std::int32_t d)
    : num_categories(s), num_dims(d) {
  if (s < 2) {
    throw ValidationError("StateSpace: need at least 2 categories, got " +
                          std::to_string(s));
  }
  if (d < 1) {
    throw ValidationError("StateSpace: need at least 1 dimension, got " +
                          std::to_string(d));
  }
}

bool StateSpace::contains(const State& x) const {
  if (x.size() != static_cast<std::size_t>(num_dims)) return false;
  for (Category c : x) {
    if (c < 0 || c >= num_categories) return false;
  }
  return true;
}

void StateSpace::require_valid(const State& x) const {
  if (!contains(x)) {
    throw ValidationError("state not in S^D (S=" +
                          std::to_string(num_categories) +
                          ", D=" + std::to_string(num_dims) + ")");
  }
}

std::size_t StateSpace::table_size(std::size_t cap) const {
  std::size_t n = 1;
  for (std::int32_t d = 0; d < num_dims; ++d) {
    if (n > cap / static_cast<std::size_t>(num_categories)) {
      throw SizeError("S^D exceeds tabulation cap of " + std::to_string(cap));
    }
    n *= static_cast<std::size_t>(num_categories);
  }
  return n;
}

std::size_t StateSpace::state_index(const State& x) const {
  require_valid(x);
  std::size_t idx = 0;
  for (Category c : x) {
    idx = idx * static_cast<std::size_t>(num_categories) +
          static_cast<std::size_t>(c);
  }
  return idx;
}

State StateSpace::state_from_index(std::size_t index) const {
  State x(static_cast<std::size_t>(num_dims));
  for (std::int32_t d = num_dims - 1; d >= 0; --d) {
    x[static_cast<std::size_t>(d)] =
        static_cast<Category>(index % static_cast<std::size_t>(num_categories));
    index /= static_cast<std::size_t>(num_categories);
  }
  if (index != 0) {
    throw ValidationError("state index out of range");
  }
  return x;
}

TimeGrid::TimeGrid(std::int32_t n) : num_inner(n) {
  if (n < 1) {
    throw ValidationError("TimeGrid: need at least 1 inner time point");
  }
}

}  // namespace dbmi
