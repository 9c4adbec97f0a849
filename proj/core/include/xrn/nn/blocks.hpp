#pragma once

#include <memory>
#include <string>
#include <vector>

#include "xrn/nn/parameter_store.hpp"
#include "xrn/ops.hpp"
#include "xrn/prng.hpp"

namespace xrn::nn {

template <typename T>
struct Conv {
  BasicVar<T> kernel;  // OIHW
  BasicVar<T> bias;    // may be undefined
  Conv2dOptions options;

  BasicVar<T> forward(const BasicVar<T>& x) const { return conv2d(x, kernel, bias, options); }
};

/// A frozen batch-norm layer (gamma not trainable) always normalizes with
/// its running statistics and never updates them.
template <typename T>
struct BatchNorm {
  BasicVar<T> gamma;
  BasicVar<T> beta;
  std::shared_ptr<BatchNormStats<T>> stats;

  BasicVar<T> forward(const BasicVar<T>& x, Mode mode) const {
    const Mode effective = gamma.requires_grad() ? mode : Mode::Eval;
    return batch_norm(x, gamma, beta, *stats, effective);
  }
};

template <typename T>
struct LinearLayer {
  BasicVar<T> weight;  // OxF
  BasicVar<T> bias;

  BasicVar<T> forward(const BasicVar<T>& x) const { return linear(x, weight, bias); }
};

/// relu(bn2(conv2(relu(bn1(conv1(x))))) + skip(x)); skip is the identity or
/// a strided 1x1 projection followed by batch norm.
template <typename T>
struct ResidualBlock {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;
  Conv<T> conv1;
  BatchNorm<T> bn1;
  Conv<T> conv2;
  BatchNorm<T> bn2;
  bool projection = false;
  Conv<T> proj;
  BatchNorm<T> proj_bn;

  BasicVar<T> forward(const BasicVar<T>& x, Mode mode) const;
};

/// BN-ReLU-Conv3x3 producing `growth` new channels.
template <typename T>
struct DenseLayer {
  BatchNorm<T> bn;
  Conv<T> conv;
};

/// Layer i sees the channel concatenation of the block input and every
/// earlier layer output; the block returns that full concatenation.
template <typename T>
struct DenseBlock {
  std::size_t in_channels = 0;
  std::size_t growth = 0;
  std::vector<DenseLayer<T>> layers;

  std::size_t out_channels() const { return in_channels + layers.size() * growth; }
  BasicVar<T> forward(const BasicVar<T>& x, Mode mode) const;
};

/// BN-ReLU-Conv1x1 then 2x2 average pooling.
template <typename T>
struct Transition {
  BatchNorm<T> bn;
  Conv<T> conv;

  BasicVar<T> forward(const BasicVar<T>& x, Mode mode) const;
};

/// Creates layers, initializes them (Kaiming-uniform weights, zero biases and
/// beta, unit gamma) and registers every tensor under `prefix.<name>`.
template <typename T>
class LayerFactory {
 public:
  LayerFactory(ParameterStore<T>& store, Prng& rng) : store_(store), rng_(rng) {}

  Conv<T> conv(const std::string& prefix, std::size_t in, std::size_t out, std::size_t kernel,
               std::size_t stride, std::size_t padding, bool with_bias = false);
  BatchNorm<T> batch_norm(const std::string& prefix, std::size_t channels);
  LinearLayer<T> linear(const std::string& prefix, std::size_t in, std::size_t out);
  ResidualBlock<T> residual_block(const std::string& prefix, std::size_t in, std::size_t out,
                                  std::size_t stride);
  DenseBlock<T> dense_block(const std::string& prefix, std::size_t in, std::size_t layers,
                            std::size_t growth);
  Transition<T> transition(const std::string& prefix, std::size_t in, std::size_t out);

  /// Kaiming-uniform tensor: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
  BasicTensor<T> kaiming_uniform(Shape shape, std::size_t fan_in);

 private:
  ParameterStore<T>& store_;
  Prng& rng_;
};

}  // namespace xrn::nn
