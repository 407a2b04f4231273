#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dbmi/state_space.hpp"

namespace dbmi {

// Benchmark-task description embedded in dataset headers. Carries enough to
// rebuild the exact generator output: for low-dimensional tasks the
// conditional matrices themselves, for image tasks the channel geometry.
struct TaskInfo {
  std::string kind;  // "lowdim" | "image"
  double exact_mi = 0.0;
  std::uint64_t seed = 0;

  // lowdim
  double sigma = 0.0;
  std::vector<std::vector<double>> conditional;  // D matrices, S*S row-major
  std::vector<double> per_dim_mi;

  // image
  std::int32_t side = 0;
  std::int32_t latent_bound = 0;  // V
  std::int32_t min_side = 0;      // V_min
  double channel_eps = 0.0;
  double target_mi = 0.0;
  std::int32_t render_version = 1;
};

// In-memory sample collection: K pairs (x0, x1) over one state space.
struct Dataset {
  StateSpace space;
  TaskInfo task;
  std::vector<State> x0;
  std::vector<State> x1;

  std::size_t size() const { return x0.size(); }
};

// Binary container (all integers little-endian):
//   bytes 0..7   magic "DBMIDS01"
//   u64          header length H
//   H bytes      JSON header: format version, space, pair count, task info
//                (exact MI printed with full round-trip precision)
//   payload      count * 2D categories, x0 then x1 per pair, one byte per
//                category when S <= 256 else two bytes (little-endian)
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

}  // namespace dbmi
