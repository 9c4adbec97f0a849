#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xrn/data/dataset.hpp"
#include "xrn/metrics.hpp"
#include "xrn/nn/model.hpp"
#include "xrn/train/adam.hpp"
#include "xrn/train/config.hpp"

namespace xrn::train {

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;  // NaN when there is no validation split
  double val_acc = 0.0;   // NaN when there is no validation split

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix confusion{2};
};

/// Loss on NxC logits as configured. Weighted cross-entropy uses reciprocal
/// class counts scaled to mean 1; `class_weights` then has one entry per class.
Var compute_loss(const Var& logits, const std::vector<int>& labels, const TrainConfig& config,
                 const std::vector<double>& class_weights);

/// Eval-mode batch norm, no augmentation, batches in index order. Throws
/// ConfigError on an empty index list.
EvalResult evaluate(const nn::Model& model, const data::Dataset& dataset, std::span<const std::size_t> indices,
                    const TrainConfig& config);
EvalResult evaluate(const nn::Model& model, const data::Dataset& dataset, data::Split split,
                    const TrainConfig& config);

/// Owns the optimizer state for one model and runs epochs over its
/// dataset's Train split.
class Trainer {
 public:
  Trainer(nn::Model& model, const data::Dataset& dataset, TrainConfig config);

  /// Training pass plus validation (when a Val split exists) for `epoch`.
  EpochMetrics train_epoch(std::size_t epoch);
  /// Overrides the schedule (tests use 0 for a null update).
  void set_lr_override(std::optional<double> lr) { lr_override_ = lr; }

  /// Index sequence the sampler produces for `epoch`.
  std::vector<std::size_t> epoch_indices(std::size_t epoch) const;
  std::size_t steps_per_epoch() const;
  const AdamState<float>& optimizer() const noexcept { return adam_; }
  const std::vector<double>& class_weights() const noexcept { return class_weights_; }

 private:
  nn::Model& model_;
  const data::Dataset& dataset_;
  TrainConfig config_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> val_;
  std::vector<double> class_weights_;   // reciprocal counts over Train
  std::vector<double> sample_weights_;  // aligned with train_
  AdamState<float> adam_;
  std::optional<double> lr_override_;
};

struct RunRecord {
  TrainConfig config;
  std::vector<EpochMetrics> epochs;
  std::optional<double> test_accuracy;
  std::optional<ConfusionMatrix> test_confusion;
  double train_acc_avg = 0.0;
  std::optional<double> val_acc_avg;
  double final_train_acc = 0.0;
  std::optional<double> final_val_acc;
  double wall_clock_seconds = 0.0;
  std::optional<std::string> abort_reason;
};

/// Builds the configured architecture, loads the checkpoint (head skipped)
/// and freezes the backbone when asked.
nn::Model prepare_model(const TrainConfig& config, std::size_t num_classes);

struct FitResult {
  RunRecord record;
  nn::Model model;
};

/// Trains for the configured epochs then evaluates the Test split. A
/// NumericError stops the run and is recorded in `abort_reason`.
FitResult fit(const TrainConfig& config, const data::Dataset& dataset);

}  // namespace xrn::train
