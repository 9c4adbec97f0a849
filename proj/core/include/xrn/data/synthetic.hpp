#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "xrn/data/image.hpp"
#include "xrn/data/labels.hpp"

namespace xrn::data {

/// Procedural stand-in for the X-ray classes. Each class is a sinusoidal
/// stripe pattern with its own orientation and frequency band:
///   Normal   horizontal, low frequency     Bacteria vertical, low frequency
///   Virus    horizontal, high frequency    Covid19  vertical, high frequency
/// Orientation and frequency survive flips, so augmentation never changes
/// the class. Phase and frequency are jittered per image and Gaussian noise
/// is added.
struct SyntheticSpec {
  std::array<std::size_t, kNumLabels> train_per_class{};
  std::array<std::size_t, kNumLabels> test_per_class{};
  std::size_t size = 64;
  double amplitude = 0.35;  // stripe contrast, fraction of the 0..255 range
  double noise = 0.08;      // Gaussian sigma, same units
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  std::vector<SampleRecord> records;
  std::vector<GrayImage> images;  // aligned with records
};

/// `n_per_class` training images per class.
SyntheticDataset make_synthetic_dataset(std::size_t n_per_class, std::size_t size, std::uint64_t seed);
SyntheticDataset make_synthetic_dataset(const SyntheticSpec& spec);

}  // namespace xrn::data
