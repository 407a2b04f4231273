#include "dbmi/rectangles.hpp"

#include <cmath>
#include <string>

#include "dbmi/error.hpp"

namespace dbmi {

double channel_mi(std::int32_t latent_bound, double eps) {
  const std::int32_t a = latent_bound + 1;
  if (a < 2) throw ValidationError("channel_mi: alphabet must be >= 2");
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw ValidationError("channel_mi: eps in [0, 1]");
  }
  // Uniform input makes the output uniform, so
  //   MI = H(output) - H(output | input) = ln A - H(transition row).
  double h_row = 0.0;
  if (eps < 1.0 && 1.0 - eps > 0.0) {
    h_row -= (1.0 - eps) * std::log(1.0 - eps);
  }
  if (eps > 0.0) {
    h_row -= eps * std::log(eps / (a - 1.0));
  }
  const double mi = std::log(static_cast<double>(a)) - h_row;
  return mi < 0.0 && mi > -1e-13 ? 0.0 : mi;
}

double solve_eps(std::int32_t latent_bound, double target_per_coordinate_mi) {
  const std::int32_t a = latent_bound + 1;
  const double max_mi = std::log(static_cast<double>(a));
  const double eps_uniform =
      static_cast<double>(latent_bound) / static_cast<double>(a);
  if (!(target_per_coordinate_mi >= 0.0 &&
        target_per_coordinate_mi <= max_mi)) {
    throw ValidationError("solve_eps: target outside [0, ln(V+1)]");
  }
  if (target_per_coordinate_mi == 0.0) return eps_uniform;
  if (target_per_coordinate_mi == max_mi) return 0.0;
  double lo = 0.0, hi = eps_uniform;
  // channel_mi is strictly decreasing on [0, V/(V+1)]
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double mi = channel_mi(latent_bound, mid);
    if (std::abs(mi - target_per_coordinate_mi) <= 1e-10) return mid;
    if (mi > target_per_coordinate_mi) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw NumericError("solve_eps: bisection failed to converge");
}

State render_rectangle(const Latents& latents, std::int32_t side,
                       std::int32_t min_side) {
  const std::int32_t left = latents[0];
  const std::int32_t top = latents[1];
  const std::int32_t width = min_side + latents[2];
  const std::int32_t height = min_side + latents[3];
  for (std::int32_t c : latents) {
    if (c < 0) throw ValidationError("render_rectangle: negative latent");
  }
  if (left + width > side || top + height > side) {
    throw ValidationError("render_rectangle: rectangle exceeds image bounds");
  }
  State image(static_cast<std::size_t>(side) * side, 0);
  for (std::int32_t r = top; r < top + height; ++r) {
    for (std::int32_t c = left; c < left + width; ++c) {
      image[static_cast<std::size_t>(r) * side + c] = 1;
    }
  }
  return image;
}

ImageTask gen_image_task(std::int32_t side, std::int32_t latent_bound,
                         std::int32_t min_side, double target_total_mi) {
  if (latent_bound < 1) {
    throw ValidationError("image task: latent bound V must be >= 1");
  }
  if (min_side < 1) {
    throw ValidationError("image task: minimum side must be >= 1");
  }
  if (min_side + 2 * latent_bound > side) {
    throw ValidationError(
        "image task: infeasible geometry, need V_min + 2V <= side (got " +
        std::to_string(min_side) + " + 2*" + std::to_string(latent_bound) +
        " > " + std::to_string(side) + ")");
  }
  const double max_total = 4.0 * std::log(latent_bound + 1.0);
  if (!(target_total_mi >= 0.0 && target_total_mi <= max_total)) {
    throw ValidationError("image task: target MI outside [0, 4 ln(V+1)]");
  }
  ImageTask task;
  task.side = side;
  task.latent_bound = latent_bound;
  task.min_side = min_side;
  task.target_mi = target_total_mi;
  task.channel_eps = solve_eps(latent_bound, target_total_mi / 4.0);
  task.exact_mi = 4.0 * channel_mi(latent_bound, task.channel_eps);
  return task;
}

std::vector<LatentPair> sample_latents(const ImageTask& task,
                                       std::size_t count, RngStream& rng) {
  const std::uint64_t a = static_cast<std::uint64_t>(task.latent_bound) + 1;
  std::vector<LatentPair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    LatentPair p;
    for (int c = 0; c < 4; ++c) {
      p.x0[c] = static_cast<std::int32_t>(rng.uniform_below(a));
    }
    for (int c = 0; c < 4; ++c) {
      if (rng.uniform01() < 1.0 - task.channel_eps) {
        p.x1[c] = p.x0[c];
      } else {
        // uniform over the other A-1 symbols
        const std::int32_t draw =
            static_cast<std::int32_t>(rng.uniform_below(a - 1));
        p.x1[c] = draw < p.x0[c] ? draw : draw + 1;
      }
    }
    pairs.push_back(p);
  }
  return pairs;
}

Dataset render_dataset(const ImageTask& task,
                       const std::vector<LatentPair>& pairs) {
  Dataset ds;
  ds.space = task.image_space();
  ds.task = image_task_info(task);
  ds.x0.reserve(pairs.size());
  ds.x1.reserve(pairs.size());
  for (const LatentPair& p : pairs) {
    ds.x0.push_back(render_rectangle(p.x0, task.side, task.min_side));
    ds.x1.push_back(render_rectangle(p.x1, task.side, task.min_side));
  }
  return ds;
}

Dataset sample_image(const ImageTask& task, std::size_t count,
                     RngStream& rng) {
  return render_dataset(task, sample_latents(task, count, rng));
}

TaskInfo image_task_info(const ImageTask& task) {
  TaskInfo info;
  info.kind = "image";
  info.exact_mi = task.exact_mi;
  info.seed = task.seed;
  info.side = task.side;
  info.latent_bound = task.latent_bound;
  info.min_side = task.min_side;
  info.channel_eps = task.channel_eps;
  info.target_mi = task.target_mi;
  info.render_version = task.render_version;
  return info;
}

ImageTask image_task_from_info(const TaskInfo& info) {
  if (info.kind != "image") {
    throw ValidationError("task info is not an image task");
  }
  ImageTask task;
  task.side = info.side;
  task.latent_bound = info.latent_bound;
  task.min_side = info.min_side;
  task.channel_eps = info.channel_eps;
  task.target_mi = info.target_mi;
  task.exact_mi = info.exact_mi;
  task.seed = info.seed;
  task.render_version = info.render_version;
  return task;
}

}  // namespace dbmi
