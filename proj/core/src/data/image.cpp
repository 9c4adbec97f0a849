#include "xrn/data/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "xrn/error.hpp"

namespace xrn::data {

GrayImage::GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
  if (pixels.size() != width * height) {
    throw ShapeError("image: " + std::to_string(pixels.size()) + " pixels for " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
}

namespace {

// Reads one whitespace-delimited header integer, skipping '#' comments.
std::size_t header_int(std::span<const std::uint8_t> b, std::size_t& pos) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= b.size() || !std::isdigit(b[pos])) throw FormatError("pgm: malformed header");
  std::size_t v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos] - '0');
    if (v > (1u << 24)) throw FormatError("pgm: header value too large");
    ++pos;
  }
  return v;
}

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("pgm: not a binary PGM (P5)");
  std::size_t pos = 2;
  const std::size_t w = header_int(bytes, pos);
  const std::size_t h = header_int(bytes, pos);
  const std::size_t maxval = header_int(bytes, pos);
  if (w == 0 || h == 0) throw FormatError("pgm: zero image dimension");
  if (maxval == 0 || maxval > 255) throw FormatError("pgm: only 8-bit maxval (1..255) is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("pgm: malformed header");
  ++pos;
  if (bytes.size() - pos < w * h) throw FormatError("pgm: pixel data truncated");
  std::vector<std::uint8_t> px(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                               bytes.begin() + static_cast<std::ptrdiff_t>(pos + w * h));
  if (maxval != 255) {
    for (auto& p : px) {
      if (p > maxval) throw FormatError("pgm: pixel exceeds maxval");
      p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
    }
  }
  return GrayImage(w, h, std::move(px));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  const std::string header = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

GrayImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_pgm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_pgm(const GrayImage& image, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write image " + path.string());
  const auto bytes = encode_pgm(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GrayImage resize_bilinear(const GrayImage& image, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw ShapeError("resize: target size must be positive");
  if (width == image.width && height == image.height) return image;
  GrayImage out(width, height);
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  const double max_x = static_cast<double>(image.width - 1);
  const double max_y = static_cast<double>(image.height - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = image.at(x0, y0) * (1.0 - wx) + image.at(x1, y0) * wx;
      const double bottom = image.at(x0, y1) * (1.0 - wx) + image.at(x1, y1) * wx;
      const double v = top * (1.0 - wy) + bottom * wy;
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

std::array<std::uint64_t, 256> intensity_histogram(const GrayImage& image) {
  std::array<std::uint64_t, 256> bins{};
  for (auto p : image.pixels) ++bins[p];
  return bins;
}

Tensor image_to_tensor(const GrayImage& image) {
  Tensor t(Shape{1, image.height, image.width});
  for (std::size_t i = 0; i < image.pixels.size(); ++i) t[i] = static_cast<float>(image.pixels[i]) / 255.0f;
  return t;
}

}  // namespace xrn::data
