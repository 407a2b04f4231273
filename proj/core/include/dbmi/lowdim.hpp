#pragma once

#include <cstdint>
#include <vector>

#include "dbmi/dataset.hpp"
#include "dbmi/joint_pmf.hpp"
#include "dbmi/rng.hpp"
#include "dbmi/state_space.hpp"

namespace dbmi {

// Factorized ground-truth benchmark: x0_d uniform over S, x1_d drawn through
// a random per-dimension conditional matrix; the exact MI is the sum of
// per-dimension MIs.
struct LowDimTask {
  StateSpace space;
  double sigma = 0.5;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> conditional;  // D matrices, S x S row-major
  std::vector<double> per_dim_mi;
  double total_mi = 0.0;
};

// Row-normalized exp(-(i-j)^2 / (2 sigma^2)) * Uniform(0,1) + 1e-12; entries
// drawn row-major.
std::vector<double> gen_conditional_matrix(std::int32_t cats, double sigma,
                                           RngStream& rng);

LowDimTask gen_lowdim_task(std::int32_t dims, std::int32_t cats, double sigma,
                           RngStream& rng);

Dataset sample_lowdim(const LowDimTask& task, std::size_t count,
                      RngStream& rng);

// Exact MI of one S x S conditional against the uniform input marginal.
double conditional_mi(const std::vector<double>& matrix, std::int32_t cats);

// Explicit S^D x S^D joint for oracle cross-checks; needs S^D within the
// tabulation cap.
JointPMF assemble_joint(const LowDimTask& task);

TaskInfo lowdim_task_info(const LowDimTask& task);
LowDimTask lowdim_task_from_info(const StateSpace& space, const TaskInfo& info);

}  // namespace dbmi
