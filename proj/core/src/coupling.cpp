#include "dbmi/coupling.hpp"

#include <numeric>

#include "dbmi/error.hpp"

namespace dbmi {

std::vector<std::size_t> random_derangement(std::size_t n, RngStream& rng) {
  if (n < 2) {
    throw ValidationError("random_derangement: no derangement of size < 2");
  }
  std::vector<std::size_t> perm(n);
  while (true) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // Fisher-Yates; uniform over all permutations, so conditioning on
    // "no fixed point" stays uniform over derangements.
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = rng.uniform_below(i + 1);
      std::swap(perm[i], perm[j]);
    }
    bool fixed_point = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (perm[i] == i) {
        fixed_point = true;
        break;
      }
    }
    if (!fixed_point) return perm;
  }
}

PairBatch permute_coupling(const PairBatch& batch, RngStream& rng) {
  if (batch.x0.size() != batch.x1.size()) {
    throw ValidationError("permute_coupling: x0/x1 length mismatch");
  }
  const std::size_t k = batch.size();
  if (k < 2) {
    throw ValidationError("permute_coupling: need K >= 2 pairs");
  }
  const std::vector<std::size_t> perm = random_derangement(k, rng);
  PairBatch out;
  out.x0 = batch.x0;
  out.x1.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.x1.push_back(batch.x1[perm[i]]);
  }
  out.coupling = Coupling::kIndependent;
  return out;
}

}  // namespace dbmi
