#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace glia {

// H x W x C raster, row-major with interleaved channels, values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<double> values;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0, std::size_t c = 3)
      : height(h), width(w), channels(c), values(h * w * c, fill) {}

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return values[(y * width + x) * channels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return values[(y * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

// Binary PPM (P6, maxval 255). Other formats are rejected with
// UnsupportedFormatError; a short payload raises PayloadError.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

// Bilinear resampling with half-pixel centres and edge clamping.
Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w);

enum class Distortion : std::uint8_t { blur, noise, blocking, contrast };

inline constexpr int kMaxDistortionLevel = 9;

std::string_view distortion_name(Distortion kind);
Distortion parse_distortion(std::string_view name);

// Strength grows strictly with level:
//   blur      Gaussian sigma 0.5 * level
//   noise     additive Gaussian sigma 0.03 * level
//   blocking  block-mean quantisation with block size level + 1
//   contrast  deviations from the channel mean scaled by 0.85^level
double distortion_strength(Distortion kind, int level);
Image synth_distort(const Image& img, Distortion kind, int level, std::uint64_t seed);

// Mean squared discrete Laplacian over the luminance channel.
double laplacian_energy(const Image& img);

// Procedural test card: gradients, shapes, gratings and fine texture.
Image make_source_image(std::size_t height, std::size_t width, std::uint64_t seed);

}  // namespace glia
