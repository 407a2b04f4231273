#include "dbmi/lowdim.hpp"

#include <cmath>

#include "dbmi/categorical.hpp"
#include "dbmi/error.hpp"

namespace dbmi {

std::vector<double> gen_conditional_matrix(std::int32_t cats, double sigma,
                                           RngStream& rng) {
  if (cats < 2) throw ValidationError("conditional matrix: need S >= 2");
  if (!(sigma > 0.0)) throw ValidationError("conditional matrix: sigma > 0");
  const std::size_t s = static_cast<std::size_t>(cats);
  std::vector<double> m(s * s);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < s; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      const double diff = static_cast<double>(i) - static_cast<double>(j);
      const double kernel = std::exp(-diff * diff * inv2s2);
      m[i * s + j] = kernel * rng.uniform01() + 1e-12;
      row_sum += m[i * s + j];
    }
    for (std::size_t j = 0; j < s; ++j) m[i * s + j] /= row_sum;
  }
  return m;
}

double conditional_mi(const std::vector<double>& matrix, std::int32_t cats) {
  const std::size_t s = static_cast<std::size_t>(cats);
  if (matrix.size() != s * s) {
    throw ValidationError("conditional_mi: bad matrix size");
  }
  // uniform input marginal: joint(i,j) = matrix(i,j)/S
  std::vector<double> out_marg(s, 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      out_marg[j] += matrix[i * s + j] / static_cast<double>(s);
    }
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const double p = matrix[i * s + j] / static_cast<double>(s);
      if (p > 0.0) {
        mi += p * std::log(matrix[i * s + j] / out_marg[j]);
      }
    }
  }
  return mi < 0.0 && mi > -1e-13 ? 0.0 : mi;
}

LowDimTask gen_lowdim_task(std::int32_t dims, std::int32_t cats, double sigma,
                           RngStream& rng) {
  if (dims < 1) throw ValidationError("lowdim task: need D >= 1");
  LowDimTask task;
  task.space = StateSpace(cats, dims);
  task.sigma = sigma;
  task.conditional.reserve(static_cast<std::size_t>(dims));
  for (std::int32_t d = 0; d < dims; ++d) {
    task.conditional.push_back(gen_conditional_matrix(cats, sigma, rng));
    task.per_dim_mi.push_back(conditional_mi(task.conditional.back(), cats));
    task.total_mi += task.per_dim_mi.back();
  }
  return task;
}

Dataset sample_lowdim(const LowDimTask& task, std::size_t count,
                      RngStream& rng) {
  if (count < 1) throw ValidationError("sample_lowdim: count >= 1");
  const std::size_t dims = static_cast<std::size_t>(task.space.num_dims);
  const std::size_t s = static_cast<std::size_t>(task.space.num_categories);
  Dataset ds;
  ds.space = task.space;
  ds.task = lowdim_task_info(task);
  ds.x0.reserve(count);
  ds.x1.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    State a(dims), b(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      a[d] = static_cast<Category>(rng.uniform_below(s));
      const double* row =
          task.conditional[d].data() + static_cast<std::size_t>(a[d]) * s;
      b[d] = sample_row({row, s}, rng);
    }
    ds.x0.push_back(std::move(a));
    ds.x1.push_back(std::move(b));
  }
  return ds;
}

JointPMF assemble_joint(const LowDimTask& task) {
  const std::size_t t = task.space.table_size();
  const std::size_t s = static_cast<std::size_t>(task.space.num_categories);
  const std::size_t dims = static_cast<std::size_t>(task.space.num_dims);
  const double inv_s = 1.0 / static_cast<double>(s);
  std::vector<double> table(t * t);
  for (std::size_t a = 0; a < t; ++a) {
    const State sa = task.space.state_from_index(a);
    for (std::size_t b = 0; b < t; ++b) {
      const State sb = task.space.state_from_index(b);
      double p = 1.0;
      for (std::size_t d = 0; d < dims; ++d) {
        p *= inv_s *
             task.conditional[d][static_cast<std::size_t>(sa[d]) * s +
                                 static_cast<std::size_t>(sb[d])];
      }
      table[a * t + b] = p;
    }
  }
  return JointPMF(task.space, std::move(table));
}

TaskInfo lowdim_task_info(const LowDimTask& task) {
  TaskInfo info;
  info.kind = "lowdim";
  info.exact_mi = task.total_mi;
  info.seed = task.seed;
  info.sigma = task.sigma;
  info.conditional = task.conditional;
  info.per_dim_mi = task.per_dim_mi;
  return info;
}

LowDimTask lowdim_task_from_info(const StateSpace& space,
                                 const TaskInfo& info) {
  if (info.kind != "lowdim") {
    throw ValidationError("task info is not a lowdim task");
  }
  if (info.conditional.size() != static_cast<std::size_t>(space.num_dims)) {
    throw ValidationError("lowdim task info: dimension mismatch");
  }
  LowDimTask task;
  task.space = space;
  task.sigma = info.sigma;
  task.seed = info.seed;
  task.conditional = info.conditional;
  task.per_dim_mi = info.per_dim_mi;
  task.total_mi = info.exact_mi;
  return task;
}

}  // namespace dbmi
