#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xrn/data/augment.hpp"
#include "xrn/losses.hpp"
#include "xrn/nn/arch.hpp"

namespace xrn::train {

enum class LossKind { CrossEntropy, WeightedCrossEntropy, Focal };
enum class SamplerKind { Plain, Weighted };

std::string_view loss_name(LossKind kind);
LossKind parse_loss(std::string_view text);
std::string_view sampler_name(SamplerKind kind);
SamplerKind parse_sampler(std::string_view text);

/// One row of the experiment table.
struct Preset {
  std::string code;
  nn::Family family;
  bool uses_checkpoint;
  LossKind loss;
  SamplerKind sampler;
};

/// PRCE PRCEW PRFL PDCXCE PDCXFL RCE RFL.
const std::vector<Preset>& presets();
/// Case-insensitive; PRCW is accepted for PRCEW. Throws ConfigError listing
/// the valid codes.
const Preset& resolve_preset(std::string_view code);
std::string preset_codes();

struct TrainConfig {
  std::string preset = "RCE";
  nn::Family family = nn::Family::ResNet;
  std::string arch;  // architecture preset; empty selects the mini model of `family`
  std::optional<std::filesystem::path> checkpoint;
  bool uses_checkpoint = false;
  bool freeze = true;
  LossKind loss = LossKind::CrossEntropy;
  FocalParams focal;
  SamplerKind sampler = SamplerKind::Plain;
  std::size_t epochs = 20;
  double base_lr = 1e-3;
  std::size_t lr_step = 10;
  double lr_factor = 0.5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  std::size_t num_classes = 4;
  std::size_t input_size = 64;
  bool augment = true;
  data::AugmentationConfig augmentation;
  std::size_t workers = 1;
  // Optimizer steps per epoch; 0 means ceil(train size / batch size).
  std::size_t steps_per_epoch = 0;

  /// Preset columns filled in; everything else at defaults.
  static TrainConfig from_preset(std::string_view code);
  /// Re-applies the preset columns after `preset` changed.
  void apply_preset(std::string_view code);

  std::string arch_name() const;
  nn::ArchitectureConfig architecture() const;
  /// Throws ConfigError on any out-of-range field, or when a transfer
  /// preset has no checkpoint.
  void validate() const;

  /// Fully resolved configuration as JSON; `from_json` accepts a subset of
  /// the same keys layered over `base`.
  std::string to_json() const;
  static TrainConfig from_json(std::string_view json_text, const TrainConfig& base);
};

}  // namespace xrn::train
