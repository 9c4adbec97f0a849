#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace xrn::nn {

enum class Family { ResNet, DenseNet };

std::string family_name(Family f);
Family parse_family(const std::string& name);

/// One residual stage: `blocks` basic blocks at `channels`; the first block
/// applies `stride` and a 1x1 projection skip when the shape changes.
struct ResidualStage {
  std::size_t blocks = 2;
  std::size_t channels = 16;
  std::size_t stride = 1;
};

/// One dense block of `layers` BN-ReLU-Conv3x3 layers adding `growth`
/// channels each. Every block except the last is followed by a transition
/// (BN-ReLU-Conv1x1 compressing channels, then 2x2 average pooling).
struct DenseStage {
  std::size_t layers = 4;
  std::size_t growth = 8;
};

struct ArchitectureConfig {
  std::string name = "custom";
  Family family = Family::ResNet;
  std::size_t input_channels = 1;
  std::size_t input_size = 64;
  std::size_t num_classes = 4;
  std::size_t stem_channels = 16;
  bool stem_pool = true;  // 2x2 max pool after the stem
  std::vector<ResidualStage> residual_stages;
  std::vector<DenseStage> dense_stages;
  double compression = 0.5;

  /// Stem 1->16, three stages of two blocks at 16/32/64 channels.
  static ArchitectureConfig mini_resnet(std::size_t num_classes = 4, std::size_t input_size = 64);
  /// Stem 1->16, three dense blocks of four layers with growth 8.
  static ArchitectureConfig mini_densenet(std::size_t num_classes = 4, std::size_t input_size = 64);
  /// Basic-block ResNet at ResNet-34 depth (3/4/6/3 blocks, 64..512 channels).
  static ArchitectureConfig resnet34(std::size_t num_classes = 4, std::size_t input_size = 224);
  /// Dense blocks of 6/12/24/16 layers, growth 32 (DenseNet-121 block layout).
  static ArchitectureConfig densenet121(std::size_t num_classes = 4, std::size_t input_size = 224);
  /// Named preset lookup: mini_resnet, mini_densenet, resnet34, densenet121.
  static ArchitectureConfig by_name(const std::string& name, std::size_t num_classes,
                                    std::size_t input_size);

  /// Throws ConfigError naming the first stage whose feature map would
  /// collapse below 1x1 or whose parameters are not positive.
  void validate() const;
  /// Channels entering the classifier head.
  std::size_t feature_channels() const;
  /// Stable 64-bit digest of every field except num_classes.
  std::uint64_t backbone_digest() const;
};

}  // namespace xrn::nn
