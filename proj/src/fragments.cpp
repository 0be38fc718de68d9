#include "glia/fragments.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "glia/errors.hpp"

namespace glia {

FragmentGrid plan_grid(std::size_t height, std::size_t width, std::size_t n_h, std::size_t n_w,
                       std::size_t f_h, std::size_t f_w, SamplingMode mode,
                       std::uint64_t seed) {
  if (n_h == 0 || n_w == 0) {
    throw ParameterError("plan_grid: grid counts must be at least 1");
  }
  if (f_h == 0 || f_w == 0) {
    throw ParameterError("plan_grid: fragment size must be at least 1x1");
  }
  FragmentGrid g;
  g.image_h = height;
  g.image_w = width;
  g.n_h = n_h;
  g.n_w = n_w;
  g.g_h = height / n_h;
  g.g_w = width / n_w;
  g.f_h = f_h;
  g.f_w = f_w;
  if (f_h > g.g_h || f_w > g.g_w) {
    throw ConstraintError("plan_grid: fragment " + std::to_string(f_h) + "x" +
                          std::to_string(f_w) + " exceeds cell " + std::to_string(g.g_h) + "x" +
                          std::to_string(g.g_w) + " (need f_h <= g_h and f_w <= g_w)");
  }
  std::vector<std::size_t> row_shift(n_h, 0);
  std::vector<std::size_t> col_shift(n_w, 0);
  if (mode == SamplingMode::random) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> rdist(0, g.g_h - f_h);
    std::uniform_int_distribution<std::size_t> cdist(0, g.g_w - f_w);
    for (auto& r : row_shift) {
      r = rdist(rng);
    }
    for (auto& c : col_shift) {
      c = cdist(rng);
    }
  }
  g.offsets.reserve(n_h * n_w);
  for (std::size_t i = 0; i < n_h; ++i) {
    for (std::size_t j = 0; j < n_w; ++j) {
      g.offsets.emplace_back(i * g.g_h + row_shift[i], j * g.g_w + col_shift[j]);
    }
  }
  return g;
}

DetailImage extract_fragments(const Image& img, const FragmentGrid& grid) {
  if (img.height != grid.image_h || img.width != grid.image_w) {
    throw DimensionError("extract_fragments: grid planned for " + std::to_string(grid.image_h) +
                         "x" + std::to_string(grid.image_w) + ", image is " +
                         std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  DetailImage out{Image(grid.detail_h(), grid.detail_w(), 0.0, img.channels), grid};
  const std::size_t row_len = grid.f_w * img.channels;
  for (std::size_t i = 0; i < grid.n_h; ++i) {
    for (std::size_t j = 0; j < grid.n_w; ++j) {
      const auto [oy, ox] = grid.offset(i, j);
      for (std::size_t y = 0; y < grid.f_h; ++y) {
        const auto src = img.values.begin() +
                         static_cast<std::ptrdiff_t>(((oy + y) * img.width + ox) * img.channels);
        const auto dst =
            out.image.values.begin() +
            static_cast<std::ptrdiff_t>(((i * grid.f_h + y) * out.image.width + j * grid.f_w) *
                                        img.channels);
        std::copy_n(src, row_len, dst);
      }
    }
  }
  return out;
}

}  // namespace glia
