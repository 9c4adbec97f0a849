#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "xrn/autodiff.hpp"

namespace xrn {

enum class Mode { Train, Eval };

/// Per-channel running statistics owned by a batch-norm layer.
template <typename T>
struct BatchNormStats {
  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;

  BatchNormStats() = default;
  explicit BatchNormStats(std::size_t channels)
      : running_mean(Shape{channels}, T{0}), running_var(Shape{channels}, T{1}) {}
};

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

struct BatchNormOptions {
  double epsilon = 1e-5;
  double momentum = 0.1;
};

// Elementwise, identical shapes.
template <typename T> BasicVar<T> add(const BasicVar<T>& a, const BasicVar<T>& b);
template <typename T> BasicVar<T> mul(const BasicVar<T>& a, const BasicVar<T>& b);
template <typename T> BasicVar<T> relu(const BasicVar<T>& x);
/// Sum of all elements, shape [1].
template <typename T> BasicVar<T> sum(const BasicVar<T>& x);

/// Cross-correlation over NCHW input with an OIHW kernel. `bias` may be
/// undefined; otherwise it has shape [O].
template <typename T>
BasicVar<T> conv2d(const BasicVar<T>& input, const BasicVar<T>& kernel, const BasicVar<T>& bias,
                   Conv2dOptions options = {});

/// Train mode normalizes with biased batch moments and folds them into
/// `stats` (unbiased variance); eval mode reads `stats` only.
template <typename T>
BasicVar<T> batch_norm(const BasicVar<T>& input, const BasicVar<T>& gamma, const BasicVar<T>& beta,
                       BatchNormStats<T>& stats, Mode mode, BatchNormOptions options = {});

/// Windows without padding; the gradient goes to the first maximum in
/// row-major window order.
template <typename T>
BasicVar<T> max_pool2d(const BasicVar<T>& input, std::size_t kernel, std::size_t stride);
template <typename T>
BasicVar<T> avg_pool2d(const BasicVar<T>& input, std::size_t kernel, std::size_t stride);
/// NCHW -> NxC.
template <typename T> BasicVar<T> global_avg_pool(const BasicVar<T>& input);

/// y = x W^T + b with x NxF, W OxF, b [O].
template <typename T>
BasicVar<T> linear(const BasicVar<T>& input, const BasicVar<T>& weight, const BasicVar<T>& bias);

template <typename T> BasicVar<T> concat_channels(const std::vector<BasicVar<T>>& inputs);

// Row-wise over the class dimension of an NxC input.
template <typename T> BasicVar<T> softmax(const BasicVar<T>& logits);
template <typename T> BasicVar<T> log_softmax(const BasicVar<T>& logits);

/// Branch decisions of the piecewise-linear ops (relu masks, max-pool
/// winners) in call order. Recording captures them at one point; replaying
/// reuses them, so nearby points evaluate the same smooth piece. Gradient
/// checks use this to keep finite differences off the kinks.
struct ActivationPattern {
  std::vector<std::vector<std::uint8_t>> relu;
  std::vector<std::vector<std::size_t>> pool;
};

/// Installs `pattern` for the current thread until destruction. Replaying
/// throws ShapeError when the graph does not match the recording.
class ActivationPatternScope {
 public:
  enum class Use { Record, Replay };
  ActivationPatternScope(ActivationPattern& pattern, Use use);
  ~ActivationPatternScope();
  ActivationPatternScope(const ActivationPatternScope&) = delete;
  ActivationPatternScope& operator=(const ActivationPatternScope&) = delete;

 private:
  void* previous_;
};

/// Output spatial extent of a convolution or pooling window; throws
/// ShapeError when the window does not fit.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t padding, const char* what);

}  // namespace xrn
