#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xrn/data/labels.hpp"
#include "xrn/prng.hpp"

namespace xrn::data {

/// weight_c = 1 / count_c. Throws ConfigError on a zero count (drop the
/// class from the task instead).
std::vector<double> compute_class_weights(std::span<const std::size_t> counts);

/// Per-record weight: the weight of the record's task label.
std::vector<double> per_sample_weights(std::span<const SampleRecord> records,
                                       std::span<const double> class_weights);

/// Task-label counts over `records`.
std::vector<std::size_t> label_counts(std::span<const SampleRecord> records, std::size_t num_classes);

/// `n` indices drawn with replacement, P(i) = w_i / sum(w). Throws on any
/// non-positive or non-finite weight.
std::vector<std::size_t> weighted_sample(std::span<const double> weights, Prng& rng, std::size_t n);

}  // namespace xrn::data
