#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xrn/nn/arch.hpp"
#include "xrn/nn/blocks.hpp"
#include "xrn/nn/parameter_store.hpp"

namespace xrn::nn {

/// A residual or dense backbone, global average pooling and a single linear
/// classifier head ("head.weight", "head.bias").
template <typename T>
class BasicModel {
 public:
  static BasicModel build(const ArchitectureConfig& config, Prng& rng);

  BasicModel(BasicModel&&) noexcept = default;
  BasicModel& operator=(BasicModel&&) noexcept = default;
  BasicModel(const BasicModel&) = delete;
  BasicModel& operator=(const BasicModel&) = delete;

  /// NxCxHxW images -> NxK logits.
  BasicVar<T> forward(const BasicVar<T>& images, Mode mode) const;
  BasicVar<T> forward(const BasicTensor<T>& images, Mode mode) const;

  const ArchitectureConfig& config() const noexcept { return config_; }
  ParameterStore<T>& parameters() noexcept { return store_; }
  const ParameterStore<T>& parameters() const noexcept { return store_; }

  /// Re-dimensions the head to `num_classes` outputs with fresh weights drawn
  /// from `rng`; nothing else changes.
  void replace_head(std::size_t num_classes, Prng& rng);
  /// Marks every non-head parameter frozen.
  void freeze_backbone();

  static bool is_head_name(const std::string& name);

  /// Every tensor a checkpoint carries: parameters in registration order,
  /// then running mean/var for each batch-norm layer.
  std::vector<std::pair<std::string, BasicTensor<T>*>> state();
  std::vector<std::pair<std::string, const BasicTensor<T>*>> state() const;

  // Layer access for block-level tests and tools.
  const std::vector<std::vector<ResidualBlock<T>>>& residual_stages() const { return stages_; }
  const std::vector<DenseBlock<T>>& dense_blocks() const { return dense_; }

 private:
  BasicModel() = default;

  ArchitectureConfig config_;
  ParameterStore<T> store_;
  Conv<T> stem_conv_;
  BatchNorm<T> stem_bn_;
  std::vector<std::vector<ResidualBlock<T>>> stages_;
  std::vector<DenseBlock<T>> dense_;
  std::vector<Transition<T>> transitions_;
  BatchNorm<T> final_bn_;
  LinearLayer<T> head_;
};

using Model = BasicModel<float>;
using ModelD = BasicModel<double>;

}  // namespace xrn::nn
