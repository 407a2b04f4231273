#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbmi/state_space.hpp"

namespace dbmi {

// Plain (ASCII, P2) PGM grid of binary images: rows x cols tiles of
// side x side pixels with 1-pixel mid-gray separators. Pixel values:
// category 0 -> 0, category 1 -> 255, separator 128. Output dimensions are
// cols*side + cols - 1 by rows*side + rows - 1.
void write_pgm_grid(const std::string& path,
                    const std::vector<State>& images, std::int32_t side,
                    std::int32_t rows, std::int32_t cols);

}  // namespace dbmi
