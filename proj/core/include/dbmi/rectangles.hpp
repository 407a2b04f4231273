#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dbmi/dataset.hpp"
#include "dbmi/rng.hpp"
#include "dbmi/state_space.hpp"

namespace dbmi {

// Image benchmark: four latent coordinates (left, top, width offset, height
// offset), each uniform on {0..V}, rendered as an axis-aligned filled
// rectangle of size (V_min + w) x (V_min + h) anchored at (left, top) in a
// binary side x side image. The anchor+size parametrization keeps the four
// latents independent, so the exact MI is four times the per-coordinate
// channel MI, and V_min + 2V <= side keeps every rectangle in bounds.
struct ImageTask {
  std::int32_t side = 16;
  std::int32_t latent_bound = 5;  // V; latent alphabet is {0..V}
  std::int32_t min_side = 5;      // V_min
  double channel_eps = 0.0;
  double target_mi = 0.0;
  double exact_mi = 0.0;  // 4 * channel_mi(latent_bound, channel_eps)
  std::uint64_t seed = 0;
  std::int32_t render_version = 1;

  StateSpace image_space() const { return StateSpace(2, side * side); }
};

using Latents = std::array<std::int32_t, 4>;

// MI of the symmetric noisy channel on an alphabet of V+1 symbols with
// uniform input: keep with probability 1-eps, else uniform over the others.
double channel_mi(std::int32_t latent_bound, double eps);

// Inverse of channel_mi on the decreasing branch [0, V/(V+1)], to 1e-10.
double solve_eps(std::int32_t latent_bound, double target_per_coordinate_mi);

// Binary image (D = side^2, S = 2, row-major pixels) with the rectangle
// pixels set to 1. Throws when the rectangle would leave the image.
State render_rectangle(const Latents& latents, std::int32_t side,
                       std::int32_t min_side);

ImageTask gen_image_task(std::int32_t side, std::int32_t latent_bound,
                         std::int32_t min_side, double target_total_mi);

struct LatentPair {
  Latents x0;
  Latents x1;
};

// x0 coordinates i.i.d. uniform, x1 coordinates through the channel. Draw
// order: per pair, 4 bounded draws for x0 then per coordinate one uniform01
// (plus one bounded draw on a flip).
std::vector<LatentPair> sample_latents(const ImageTask& task,
                                       std::size_t count, RngStream& rng);

// Renders latent pairs into an image dataset carrying the task header.
Dataset render_dataset(const ImageTask& task,
                       const std::vector<LatentPair>& pairs);

Dataset sample_image(const ImageTask& task, std::size_t count, RngStream& rng);

TaskInfo image_task_info(const ImageTask& task);
ImageTask image_task_from_info(const TaskInfo& info);

}  // namespace dbmi
