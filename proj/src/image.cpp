#include "glia/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "glia/errors.hpp"

namespace glia {
namespace {

void skip_space_and_comments(const std::string& buf, std::size_t& pos) {
  while (pos < buf.size()) {
    if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') {
        ++pos;
      }
    } else {
      break;
    }
  }
}

std::size_t read_header_int(const std::string& buf, std::size_t& pos,
                            const std::filesystem::path& path, const char* what) {
  skip_space_and_comments(buf, pos);
  std::size_t start = pos;
  std::size_t value = 0;
  while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
    value = value * 10 + static_cast<std::size_t>(buf[pos] - '0');
    if (value > (1u << 24)) {
      throw FormatError(path.string() + ": malformed header, " + what + " too large");
    }
    ++pos;
  }
  if (pos == start) {
    throw FormatError(path.string() + ": malformed header, expected " + what);
  }
  return value;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open image " + path.string());
  }
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() >= 8 && static_cast<unsigned char>(buf[0]) == 0x89 && buf.substr(1, 3) == "PNG") {
    throw UnsupportedFormatError(path.string() + ": PNG support is not built in; convert to P6");
  }
  if (buf.size() < 2 || buf[0] != 'P') {
    throw FormatError(path.string() + ": malformed header, missing PPM magic");
  }
  if (buf[1] != '6') {
    throw UnsupportedFormatError(path.string() + ": netpbm variant P" + std::string(1, buf[1]) +
                                 " is not supported (binary P6 only)");
  }
  std::size_t pos = 2;
  const auto width = read_header_int(buf, pos, path, "width");
  const auto height = read_header_int(buf, pos, path, "height");
  const auto maxval = read_header_int(buf, pos, path, "maxval");
  if (width == 0 || height == 0) {
    throw FormatError(path.string() + ": malformed header, zero dimension");
  }
  if (maxval != 255) {
    throw UnsupportedFormatError(path.string() + ": maxval " + std::to_string(maxval) +
                                 " is not supported (255 only)");
  }
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
    throw FormatError(path.string() + ": malformed header, no separator before payload");
  }
  ++pos;
  const std::size_t need = width * height * 3;
  if (buf.size() - pos < need) {
    throw PayloadError(path.string() + ": truncated payload, expected " + std::to_string(need) +
                       " bytes, found " + std::to_string(buf.size() - pos));
  }
  Image img(height, width);
  for (std::size_t i = 0; i < need; ++i) {
    img.values[i] = static_cast<unsigned char>(buf[pos + i]) / 255.0;
  }
  return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 3) {
    throw DimensionError("save_image: P6 needs 3 channels, image has " +
                         std::to_string(img.channels));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write image " + path.string());
  }
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::string payload(img.values.size(), '\0');
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    payload[i] = static_cast<char>(
        static_cast<unsigned char>(std::lround(clamp01(img.values[i]) * 255.0)));
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) {
    throw ParameterError("resize_bilinear: target size must be at least 1x1");
  }
  Image out(out_h, out_w, 0.0, img.channels);
  const double sy_scale = static_cast<double>(img.height) / static_cast<double>(out_h);
  const double sx_scale = static_cast<double>(img.width) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double sy = std::clamp((static_cast<double>(y) + 0.5) * sy_scale - 0.5, 0.0,
                                 static_cast<double>(img.height - 1));
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double sx = std::clamp((static_cast<double>(x) + 0.5) * sx_scale - 0.5, 0.0,
                                   static_cast<double>(img.width - 1));
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < img.channels; ++c) {
        const double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        const double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        out.at(y, x, c) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

std::string_view distortion_name(Distortion kind) {
  switch (kind) {
    case Distortion::blur:
      return "blur";
    case Distortion::noise:
      return "noise";
    case Distortion::blocking:
      return "blocking";
    case Distortion::contrast:
      return "contrast";
  }
  return "unknown";
}

Distortion parse_distortion(std::string_view name) {
  for (auto k : {Distortion::blur, Distortion::noise, Distortion::blocking,
                 Distortion::contrast}) {
    if (distortion_name(k) == name) {
      return k;
    }
  }
  throw ParameterError("unknown distortion kind '" + std::string(name) +
                       "' (expected blur, noise, blocking, contrast)");
}

double distortion_strength(Distortion kind, int level) {
  if (level < 1 || level > kMaxDistortionLevel) {
    throw ParameterError("distortion level " + std::to_string(level) + " outside 1.." +
                         std::to_string(kMaxDistortionLevel));
  }
  switch (kind) {
    case Distortion::blur:
      return 0.5 * level;
    case Distortion::noise:
      return 0.03 * level;
    case Distortion::blocking:
      return static_cast<double>(level + 1);
    case Distortion::contrast:
      return 1.0 - std::pow(0.85, level);
  }
  throw ParameterError("unknown distortion kind");
}

namespace {

Image gaussian_blur(const Image& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * i * i / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (auto& w : kernel) {
    w /= total;
  }
  const auto h = static_cast<int>(img.height);
  const auto w = static_cast<int>(img.width);
  Image tmp(img.height, img.width, 0.0, img.channels);
  Image out(img.height, img.width, 0.0, img.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = std::clamp(x + i, 0, w - 1);
          acc += kernel[static_cast<std::size_t>(i + radius)] *
                 img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(xx), c);
        }
        tmp.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = acc;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          acc += kernel[static_cast<std::size_t>(i + radius)] *
                 tmp.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(x), c);
        }
        out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = clamp01(acc);
      }
    }
  }
  return out;
}

Image block_mean(const Image& img, std::size_t block) {
  Image out = img;
  for (std::size_t by = 0; by < img.height; by += block) {
    for (std::size_t bx = 0; bx < img.width; bx += block) {
      const std::size_t ey = std::min(by + block, img.height);
      const std::size_t ex = std::min(bx + block, img.width);
      for (std::size_t c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (std::size_t y = by; y < ey; ++y) {
          for (std::size_t x = bx; x < ex; ++x) {
            acc += img.at(y, x, c);
          }
        }
        const double m = acc / static_cast<double>((ey - by) * (ex - bx));
        for (std::size_t y = by; y < ey; ++y) {
          for (std::size_t x = bx; x < ex; ++x) {
            out.at(y, x, c) = m;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

Image synth_distort(const Image& img, Distortion kind, int level, std::uint64_t seed) {
  const double strength = distortion_strength(kind, level);
  switch (kind) {
    case Distortion::blur:
      return gaussian_blur(img, strength);
    case Distortion::noise: {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> dist(0.0, strength);
      Image out = img;
      for (auto& v : out.values) {
        v = clamp01(v + dist(rng));
      }
      return out;
    }
    case Distortion::blocking:
      return block_mean(img, static_cast<std::size_t>(strength));
    case Distortion::contrast: {
      const double keep = 1.0 - strength;
      Image out = img;
      const std::size_t pixels = img.height * img.width;
      for (std::size_t c = 0; c < img.channels; ++c) {
        double m = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) {
          m += img.values[i * img.channels + c];
        }
        m /= static_cast<double>(pixels);
        for (std::size_t i = 0; i < pixels; ++i) {
          auto& v = out.values[i * img.channels + c];
          v = clamp01(m + keep * (v - m));
        }
      }
      return out;
    }
  }
  throw ParameterError("unknown distortion kind");
}

double laplacian_energy(const Image& img) {
  if (img.height < 3 || img.width < 3) {
    return 0.0;
  }
  auto lum = [&](std::size_t y, std::size_t x) {
    double s = 0.0;
    for (std::size_t c = 0; c < img.channels; ++c) {
      s += img.at(y, x, c);
    }
    return s / static_cast<double>(img.channels);
  };
  double acc = 0.0;
  for (std::size_t y = 1; y + 1 < img.height; ++y) {
    for (std::size_t x = 1; x + 1 < img.width; ++x) {
      const double l = lum(y - 1, x) + lum(y + 1, x) + lum(y, x - 1) + lum(y, x + 1) -
                       4.0 * lum(y, x);
      acc += l * l;
    }
  }
  return acc / static_cast<double>((img.height - 2) * (img.width - 2));
}

Image make_source_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(height, width);
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);

  double base[3];
  double slope_y[3];
  double slope_x[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.25 + 0.5 * u(rng);
    slope_y[c] = 0.4 * (u(rng) - 0.5);
    slope_x[c] = 0.4 * (u(rng) - 0.5);
  }
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        img.at(y, x, c) = base[c] + slope_y[c] * (static_cast<double>(y) / h - 0.5) +
                          slope_x[c] * (static_cast<double>(x) / w - 0.5);
      }
    }
  }

  const int shapes = 5 + static_cast<int>(u(rng) * 4);
  for (int s = 0; s < shapes; ++s) {
    const double cy = u(rng) * h;
    const double cx = u(rng) * w;
    const double ry = (0.08 + 0.2 * u(rng)) * h;
    const double rx = (0.08 + 0.2 * u(rng)) * w;
    const bool disc = u(rng) < 0.5;
    const double color[3] = {u(rng), u(rng), u(rng)};
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double dy = (static_cast<double>(y) - cy) / ry;
        const double dx = (static_cast<double>(x) - cx) / rx;
        const bool inside = disc ? dy * dy + dx * dx <= 1.0
                                 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
        if (inside) {
          for (std::size_t c = 0; c < 3; ++c) {
            img.at(y, x, c) = color[c];
          }
        }
      }
    }
  }

  const double freq_y = 0.15 + 0.5 * u(rng);
  const double freq_x = 0.15 + 0.5 * u(rng);
  const double phase = 2.0 * std::numbers::pi * u(rng);
  const std::size_t period = 2 + static_cast<std::size_t>(u(rng) * 3);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double grating =
          0.08 * std::sin(freq_y * static_cast<double>(y) + freq_x * static_cast<double>(x) + phase);
      const double checker = ((y / period + x / period) % 2 == 0) ? 0.06 : -0.06;
      for (std::size_t c = 0; c < 3; ++c) {
        img.at(y, x, c) = clamp01(img.at(y, x, c) + grating + checker);
      }
    }
  }
  return img;
}

}  // namespace glia
