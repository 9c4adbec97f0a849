#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "xrn/tensor.hpp"

namespace xrn {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  void add(int truth, int predicted);
  std::size_t num_classes() const noexcept { return classes_; }
  std::size_t count(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  std::size_t total() const noexcept { return total_; }
  std::size_t row_sum(std::size_t truth) const;
  double accuracy() const;
  /// Recall of class c; nullopt when no sample of c was evaluated.
  std::optional<double> class_accuracy(std::size_t c) const;
  /// Mean of defined per-class accuracies.
  std::optional<double> macro_accuracy() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

/// Row-wise argmax of an NxC tensor, ties to the lowest index.
template <typename T>
std::vector<int> argmax_rows(const BasicTensor<T>& logits);

template <typename T>
double accuracy(const BasicTensor<T>& logits, std::span<const int> labels);

template <typename T>
std::vector<std::optional<double>> per_class_accuracy(const BasicTensor<T>& logits,
                                                      std::span<const int> labels);

template <typename T>
ConfusionMatrix confusion(const BasicTensor<T>& logits, std::span<const int> labels);

ConfusionMatrix confusion_from_predictions(std::span<const int> predicted, std::span<const int> labels,
                                           std::size_t num_classes);

/// Arithmetic mean of per-epoch accuracies; throws on an empty history.
double epoch_average_accuracy(std::span<const double> per_epoch);

}  // namespace xrn
