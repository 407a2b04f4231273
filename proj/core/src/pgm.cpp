#include "dbmi/pgm.hpp"

#include <fstream>

#include "dbmi/error.hpp"

namespace dbmi {

void write_pgm_grid(const std::string& path, const std::vector<State>& images,
                    std::int32_t side, std::int32_t rows, std::int32_t cols) {
  if (images.size() != static_cast<std::size_t>(rows) * cols) {
    throw ValidationError("pgm grid: need rows*cols images");
  }
  for (const State& img : images) {
    if (img.size() != static_cast<std::size_t>(side) * side) {
      throw ValidationError("pgm grid: image size mismatch");
    }
  }
  const std::int32_t width = cols * side + cols - 1;
  const std::int32_t height = rows * side + rows - 1;
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open PGM for writing: " + path);
  }
  out << "P2\n" << width << ' ' << height << "\n255\n";
  for (std::int32_t y = 0; y < height; ++y) {
    const std::int32_t tile_r = y / (side + 1);
    const std::int32_t in_r = y % (side + 1);
    for (std::int32_t x = 0; x < width; ++x) {
      const std::int32_t tile_c = x / (side + 1);
      const std::int32_t in_c = x % (side + 1);
      int value = 128;  // separator
      if (in_r < side && in_c < side) {
        const State& img =
            images[static_cast<std::size_t>(tile_r) * cols + tile_c];
        value = img[static_cast<std::size_t>(in_r) * side + in_c] != 0 ? 255
                                                                       : 0;
      }
      out << value << (x + 1 == width ? '\n' : ' ');
    }
  }
  if (!out) {
    throw IoError("short write while saving PGM: " + path);
  }
}

}  // namespace dbmi
