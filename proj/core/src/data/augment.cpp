#include "xrn/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xrn/error.hpp"

namespace xrn::data {

void AugmentationConfig::validate() const {
  for (double p : {p_hflip, p_vflip, p_rotate}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augmentation probabilities must lie in [0, 1]");
  }
  if (!(max_rotation_degrees >= 0.0)) throw ConfigError("augmentation: rotation range must be non-negative");
}

GrayImage hflip(const GrayImage& image) {
  GrayImage out(image.width, image.height);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) out.at(x, y) = image.at(image.width - 1 - x, y);
  }
  return out;
}

GrayImage vflip(const GrayImage& image) {
  GrayImage out(image.width, image.height);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) out.at(x, y) = image.at(x, image.height - 1 - y);
  }
  return out;
}

GrayImage rotate(const GrayImage& image, double degrees) {
  GrayImage out(image.width, image.height);
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cx = (static_cast<double>(image.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(image.height) - 1.0) / 2.0;
  const auto w = static_cast<long>(image.width), h = static_cast<long>(image.height);
  auto sample = [&](long x, long y) -> double {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : image.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  };
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      // Inverse map the destination pixel into the source.
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const auto x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
      const double v = (sample(x0, y0) * (1.0 - ax) + sample(x0 + 1, y0) * ax) * (1.0 - ay) +
                       (sample(x0, y0 + 1) * (1.0 - ax) + sample(x0 + 1, y0 + 1) * ax) * ay;
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

GrayImage augment(const GrayImage& image, const AugmentationConfig& config, Prng& rng) {
  const double u_h = rng.uniform();
  const double u_v = rng.uniform();
  const double u_r = rng.uniform();
  const double angle = rng.uniform(-config.max_rotation_degrees, config.max_rotation_degrees);
  GrayImage out = image;
  if (u_h < config.p_hflip) out = hflip(out);
  if (u_v < config.p_vflip) out = vflip(out);
  if (u_r < config.p_rotate) out = rotate(out, angle);
  return out;
}

}  // namespace xrn::data
