#include "xrn/metrics.hpp"

#include <string>

#include "xrn/error.hpp"

namespace xrn {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : classes_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw ConfigError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int truth, int predicted) {
  const auto in_range = [&](int v) { return v >= 0 && static_cast<std::size_t>(v) < classes_; };
  if (!in_range(truth) || !in_range(predicted)) {
    throw ConfigError("confusion: class index out of range (" + std::to_string(truth) + ", " +
                      std::to_string(predicted) + ")");
  }
  ++counts_[static_cast<std::size_t>(truth) * classes_ + static_cast<std::size_t>(predicted)];
  ++total_;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += count(truth, p);
  return s;
}

double ConfusionMatrix::accuracy() const {
  if (total_ == 0) return 0.0;
  std::size_t diag = 0;
  for (std::size_t c = 0; c < classes_; ++c) diag += count(c, c);
  return static_cast<double>(diag) / static_cast<double>(total_);
}

std::optional<double> ConfusionMatrix::class_accuracy(std::size_t c) const {
  const std::size_t row = row_sum(c);
  if (row == 0) return std::nullopt;
  return static_cast<double>(count(c, c)) / static_cast<double>(row);
}

std::optional<double> ConfusionMatrix::macro_accuracy() const {
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t c = 0; c < classes_; ++c) {
    if (auto a = class_accuracy(c)) {
      s += *a;
      ++k;
    }
  }
  if (k == 0) return std::nullopt;
  return s / static_cast<double>(k);
}

template <typename T>
std::vector<int> argmax_rows(const BasicTensor<T>& logits) {
  if (logits.ndim() != 2) throw ShapeError("argmax_rows: expected NxC, got " + shape_str(logits.shape()));
  const std::size_t N = logits.dim(0), C = logits.dim(1);
  std::vector<int> out(N);
  for (std::size_t n = 0; n < N; ++n) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c) {
      if (logits[n * C + c] > logits[n * C + best]) best = c;
    }
    out[n] = static_cast<int>(best);
  }
  return out;
}

ConfusionMatrix confusion_from_predictions(std::span<const int> predicted, std::span<const int> labels,
                                           std::size_t num_classes) {
  if (predicted.size() != labels.size()) {
    throw ShapeError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) m.add(labels[i], predicted[i]);
  return m;
}

template <typename T>
ConfusionMatrix confusion(const BasicTensor<T>& logits, std::span<const int> labels) {
  const auto pred = argmax_rows(logits);
  return confusion_from_predictions(pred, labels, logits.dim(1));
}

template <typename T>
double accuracy(const BasicTensor<T>& logits, std::span<const int> labels) {
  if (labels.empty()) throw ConfigError("accuracy: no samples");
  return confusion(logits, labels).accuracy();
}

template <typename T>
std::vector<std::optional<double>> per_class_accuracy(const BasicTensor<T>& logits,
                                                      std::span<const int> labels) {
  const ConfusionMatrix m = confusion(logits, labels);
  std::vector<std::optional<double>> out(m.num_classes());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = m.class_accuracy(c);
  return out;
}

double epoch_average_accuracy(std::span<const double> per_epoch) {
  if (per_epoch.empty()) throw ConfigError("epoch_average_accuracy: empty history");
  double s = 0.0;
  for (double a : per_epoch) s += a;
  return s / static_cast<double>(per_epoch.size());
}

#define XRN_INSTANTIATE_METRICS(T)                                                              \
  template std::vector<int> argmax_rows(const BasicTensor<T>&);                                \
  template double accuracy(const BasicTensor<T>&, std::span<const int>);                       \
  template std::vector<std::optional<double>> per_class_accuracy(const BasicTensor<T>&,         \
                                                                 std::span<const int>);         \
  template ConfusionMatrix confusion(const BasicTensor<T>&, std::span<const int>);

XRN_INSTANTIATE_METRICS(float)
XRN_INSTANTIATE_METRICS(double)

}  // namespace xrn
