#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xrn/data/augment.hpp"
#include "xrn/data/image.hpp"
#include "xrn/data/labels.hpp"
#include "xrn/data/synthetic.hpp"
#include "xrn/prng.hpp"
#include "xrn/tensor.hpp"

namespace xrn::data {

/// Records with their decoded images, all resized to size x size.
struct Dataset {
  std::vector<SampleRecord> records;
  std::vector<GrayImage> images;  // aligned with records
  std::size_t size = 64;
  std::size_t num_classes = kNumLabels;

  std::size_t count() const noexcept { return records.size(); }
  /// Positions of the records in `split`, in dataset order.
  std::vector<std::size_t> indices(Split split) const;
};

Dataset from_synthetic(SyntheticDataset synthetic);

/// Decodes `records[i].image_ref` relative to `images_root` (absolute refs
/// are used as-is) and resizes to size x size.
Dataset load_dataset(std::vector<SampleRecord> records, const std::filesystem::path& images_root, std::size_t size);

/// Keeps classes `a` and `b`, relabelled 0 and 1. Throws ConfigError when
/// a == b or nothing is left.
std::vector<SampleRecord> binary_filter(std::span<const SampleRecord> records, ClassLabel a, ClassLabel b);
Dataset binary_filter(const Dataset& dataset, ClassLabel a, ClassLabel b);

/// Moves floor(fraction * n_c) Train records of every class c to Val,
/// chosen by a seeded shuffle. Existing Val records are left alone.
void carve_validation(Dataset& dataset, double fraction, std::uint64_t seed);

struct Batch {
  Tensor images;  // N x 1 x H x W in [0, 1]
  std::vector<int> labels;
};

/// Assembles dataset[indices] in index order. When `augmentation` is given,
/// sample i is augmented with its own generator derived from one draw of
/// `rng` and i, so the result does not depend on `workers`.
Batch make_batch(const Dataset& dataset, std::span<const std::size_t> indices,
                 const AugmentationConfig* augmentation, Prng& rng, std::size_t workers = 1);

}  // namespace xrn::data
