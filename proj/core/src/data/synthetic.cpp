#include "xrn/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "xrn/error.hpp"
#include "xrn/prng.hpp"

namespace xrn::data {

void SyntheticSpec::validate() const {
  if (size < 16) throw ConfigError("synthetic: image size must be >= 16");
  std::size_t total = 0;
  for (auto n : train_per_class) total += n;
  for (auto n : test_per_class) total += n;
  if (total == 0) throw ConfigError("synthetic: no images requested");
  if (!(amplitude > 0.0 && amplitude <= 0.5)) throw ConfigError("synthetic: amplitude must lie in (0, 0.5]");
  if (!(noise >= 0.0)) throw ConfigError("synthetic: noise must be non-negative");
}

namespace {

GrayImage render(ClassLabel label, std::size_t size, double amplitude, double noise, Prng& rng) {
  const bool vertical = label == ClassLabel::Bacteria || label == ClassLabel::Covid19;
  const bool high = label == ClassLabel::Virus || label == ClassLabel::Covid19;
  // Cycles across the image.
  const double cycles = (high ? 6.0 : 2.0) + rng.uniform(-0.5, 0.5);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double base = 0.5 + rng.uniform(-0.05, 0.05);
  GrayImage img(size, size);
  const double omega = 2.0 * std::numbers::pi * cycles / static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double t = static_cast<double>(vertical ? x : y);
      const double v = base + amplitude * std::sin(omega * t + phase) + noise * rng.normal();
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
    }
  }
  return img;
}

void emit(SyntheticDataset& out, const SyntheticSpec& spec, Split split,
          const std::array<std::size_t, kNumLabels>& counts) {
  for (ClassLabel label : kAllLabels) {
    const auto c = static_cast<std::size_t>(label);
    for (std::size_t i = 0; i < counts[c]; ++i) {
      // Keyed by (class, split, index) so adding images of one class never
      // changes those of another.
      const std::uint64_t key = (static_cast<std::uint64_t>(split) << 56) | (static_cast<std::uint64_t>(c) << 48) | i;
      Prng rng = Prng::derive(spec.seed, "synthetic", key);
      SampleRecord rec;
      rec.image_ref = "synthetic:" + std::string(split_name(split)) + ":" + std::string(label_name(label)) + ":" +
                      std::to_string(i);
      rec.source = label;
      rec.label = static_cast<int>(label);
      rec.split = split;
      out.records.push_back(std::move(rec));
      out.images.push_back(render(label, spec.size, spec.amplitude, spec.noise, rng));
    }
  }
}

}  // namespace

SyntheticDataset make_synthetic_dataset(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticDataset out;
  emit(out, spec, Split::Train, spec.train_per_class);
  emit(out, spec, Split::Test, spec.test_per_class);
  return out;
}

SyntheticDataset make_synthetic_dataset(std::size_t n_per_class, std::size_t size, std::uint64_t seed) {
  if (n_per_class == 0) throw ConfigError("synthetic: n_per_class must be >= 1");
  SyntheticSpec spec;
  spec.train_per_class.fill(n_per_class);
  spec.size = size;
  spec.seed = seed;
  return make_synthetic_dataset(spec);
}

}  // namespace xrn::data
