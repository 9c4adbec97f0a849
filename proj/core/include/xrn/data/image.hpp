#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xrn/tensor.hpp"

namespace xrn::data {

/// 8-bit grayscale, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(w * h, fill) {}
  GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px);

  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary PGM ("P5"), maxval 1..255; values are rescaled to 0..255 when
/// maxval < 255. Header comments are allowed.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);

/// Reads a PGM file; errors name the path.
GrayImage load_image(const std::filesystem::path& path);
void save_pgm(const GrayImage& image, const std::filesystem::path& path);

/// Bilinear resampling with half-pixel centers and edge clamping; results
/// are rounded to the nearest integer.
GrayImage resize_bilinear(const GrayImage& image, std::size_t width, std::size_t height);

std::array<std::uint64_t, 256> intensity_histogram(const GrayImage& image);

/// 1xHxW tensor with values scaled to [0, 1].
Tensor image_to_tensor(const GrayImage& image);

}  // namespace xrn::data
