#include "xrn/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <thread>

#include "xrn/error.hpp"

namespace xrn::data {

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == split) out.push_back(i);
  }
  return out;
}

Dataset from_synthetic(SyntheticDataset synthetic) {
  Dataset d;
  d.records = std::move(synthetic.records);
  d.images = std::move(synthetic.images);
  d.size = d.images.empty() ? 64 : d.images.front().width;
  return d;
}

Dataset load_dataset(std::vector<SampleRecord> records, const std::filesystem::path& images_root, std::size_t size) {
  if (size == 0) throw ConfigError("dataset: image size must be positive");
  Dataset d;
  d.size = size;
  d.images.reserve(records.size());
  for (const auto& r : records) {
    std::filesystem::path p(r.image_ref);
    if (p.is_relative()) p = images_root / p;
    d.images.push_back(resize_bilinear(load_image(p), size, size));
  }
  d.records = std::move(records);
  return d;
}

std::vector<SampleRecord> binary_filter(std::span<const SampleRecord> records, ClassLabel a, ClassLabel b) {
  if (a == b) {
    throw ConfigError("binary_filter: the two classes must differ (got " + std::string(label_name(a)) + " twice)");
  }
  std::vector<SampleRecord> out;
  for (const auto& r : records) {
    if (r.source == a || r.source == b) {
      SampleRecord copy = r;
      copy.label = r.source == a ? 0 : 1;
      out.push_back(std::move(copy));
    }
  }
  if (out.empty()) {
    throw ConfigError("binary_filter: no records of class " + std::string(label_name(a)) + " or " +
                      std::string(label_name(b)));
  }
  return out;
}

Dataset binary_filter(const Dataset& dataset, ClassLabel a, ClassLabel b) {
  auto kept = binary_filter(std::span<const SampleRecord>(dataset.records), a, b);
  Dataset out;
  out.size = dataset.size;
  out.num_classes = 2;
  out.records = std::move(kept);
  out.images.reserve(out.records.size());
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (dataset.records[i].source == a || dataset.records[i].source == b) out.images.push_back(dataset.images[i]);
  }
  return out;
}

void carve_validation(Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in [0, 1)");
  for (std::size_t c = 0; c < dataset.num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
      const auto& r = dataset.records[i];
      if (r.split == Split::Train && r.label == static_cast<int>(c)) members.push_back(i);
    }
    const auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size())));
    if (take == 0) continue;
    // Partial Fisher-Yates with a per-class stream.
    Prng rng = Prng::derive(seed, "validation", c);
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.bounded(static_cast<std::uint32_t>(members.size() - i));
      std::swap(members[i], members[j]);
      dataset.records[members[i]].split = Split::Val;
    }
  }
}

Batch make_batch(const Dataset& dataset, std::span<const std::size_t> indices,
                 const AugmentationConfig* augmentation, Prng& rng, std::size_t workers) {
  if (indices.empty()) throw ConfigError("make_batch: no indices");
  const std::size_t hw = dataset.size * dataset.size;
  Batch batch{Tensor(Shape{indices.size(), 1, dataset.size, dataset.size}), std::vector<int>(indices.size())};
  const std::uint64_t key = rng.next_u64();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= dataset.count()) throw ConfigError("make_batch: index out of range");
    batch.labels[i] = dataset.records[indices[i]].label;
  }
  float* out = batch.images.ptr();
  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const GrayImage& src = dataset.images[indices[i]];
      if (src.width != dataset.size || src.height != dataset.size) {
        throw ShapeError("make_batch: image " + dataset.records[indices[i]].image_ref + " is not " +
                         std::to_string(dataset.size) + "x" + std::to_string(dataset.size));
      }
      GrayImage aug;
      const GrayImage* img = &src;
      if (augmentation) {
        Prng sample_rng = Prng::derive(key, "augment", i);
        aug = augment(src, *augmentation, sample_rng);
        img = &aug;
      }
      float* dst = out + i * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] = static_cast<float>(img->pixels[p]) / 255.0f;
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, indices.size());
  if (workers == 1) {
    fill(0, indices.size());
    return batch;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (indices.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk, end = std::min(indices.size(), begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        fill(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return batch;
}

}  // namespace xrn::data
