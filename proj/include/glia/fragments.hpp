#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "glia/image.hpp"

namespace glia {

enum class SamplingMode : std::uint8_t { deterministic, random };

// Grid geometry for fragment sampling. The image is cut into n_h x n_w cells
// of g_h = floor(H / n_h) by g_w = floor(W / n_w) pixels and one f_h x f_w
// window is taken from each cell.
struct FragmentGrid {
  std::size_t image_h = 0;
  std::size_t image_w = 0;
  std::size_t n_h = 0;
  std::size_t n_w = 0;
  std::size_t g_h = 0;
  std::size_t g_w = 0;
  std::size_t f_h = 0;
  std::size_t f_w = 0;
  // Row-major over cells: offsets[i * n_w + j] = (row, col) of window (i, j).
  std::vector<std::pair<std::size_t, std::size_t>> offsets;

  std::pair<std::size_t, std::size_t> offset(std::size_t i, std::size_t j) const {
    return offsets[i * n_w + j];
  }
  std::size_t detail_h() const { return n_h * f_h; }
  std::size_t detail_w() const { return n_w * f_w; }
};

// Deterministic mode puts window (i, j) at (i * g_h, j * g_w). Random mode
// shifts each grid row by r_i in [0, g_h - f_h] and each grid column by
// c_j in [0, g_w - f_w], drawn from `seed`.
FragmentGrid plan_grid(std::size_t height, std::size_t width, std::size_t n_h, std::size_t n_w,
                       std::size_t f_h, std::size_t f_w,
                       SamplingMode mode = SamplingMode::deterministic, std::uint64_t seed = 0);

struct DetailImage {
  Image image;
  FragmentGrid grid;
};

// Splices the windows into an (n_h * f_h) x (n_w * f_w) image; tile (i, j)
// is a verbatim copy of the source window at grid.offset(i, j).
DetailImage extract_fragments(const Image& img, const FragmentGrid& grid);

}  // namespace glia
