#include "xrn/data/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xrn/error.hpp"

namespace xrn::data {

std::vector<double> compute_class_weights(std::span<const std::size_t> counts) {
  std::vector<double> w;
  w.reserve(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw ConfigError("class " + std::to_string(c) +
                        " has no samples; drop it from the task before computing sampling weights");
    }
    w.push_back(1.0 / static_cast<double>(counts[c]));
  }
  return w;
}

std::vector<double> per_sample_weights(std::span<const SampleRecord> records,
                                       std::span<const double> class_weights) {
  std::vector<double> w;
  w.reserve(records.size());
  for (const auto& r : records) {
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= class_weights.size()) {
      throw ConfigError("record label " + std::to_string(r.label) + " has no class weight");
    }
    w.push_back(class_weights[static_cast<std::size_t>(r.label)]);
  }
  return w;
}

std::vector<std::size_t> label_counts(std::span<const SampleRecord> records, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& r : records) {
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= num_classes) {
      throw ConfigError("record label " + std::to_string(r.label) + " outside the task's classes");
    }
    ++counts[static_cast<std::size_t>(r.label)];
  }
  return counts;
}

std::vector<std::size_t> weighted_sample(std::span<const double> weights, Prng& rng, std::size_t n) {
  if (weights.empty()) throw ConfigError("weighted_sample: no weights");
  if (n == 0) throw ConfigError("weighted_sample: n must be >= 1");
  std::vector<double> cumulative(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw ConfigError("weighted_sample: weight " + std::to_string(i) + " is not positive and finite");
    }
    total += weights[i];
    cumulative[i] = total;
  }
  std::vector<std::size_t> out(n);
  for (auto& idx : out) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    idx = static_cast<std::size_t>(it - cumulative.begin());
  }
  return out;
}

}  // namespace xrn::data
