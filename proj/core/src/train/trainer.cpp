#include "xrn/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "xrn/data/sampler.hpp"
#include "xrn/error.hpp"
#include "xrn/losses.hpp"
#include "xrn/nn/checkpoint.hpp"
#include "xrn/train/schedule.hpp"

namespace xrn::train {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Separate streams per purpose so changing one never shifts another.
constexpr std::uint64_t epoch_key(std::size_t epoch, std::size_t step) {
  return (static_cast<std::uint64_t>(epoch) << 32) | static_cast<std::uint64_t>(step);
}

}  // namespace

Var compute_loss(const Var& logits, const std::vector<int>& labels, const TrainConfig& config,
                 const std::vector<double>& class_weights) {
  const std::size_t C = logits.shape().at(1);
  switch (config.loss) {
    case LossKind::CrossEntropy:
      return cross_entropy(logits, one_hot<float>(labels, C));
    case LossKind::WeightedCrossEntropy:
      if (class_weights.size() != C) throw ConfigError("weighted cross-entropy needs one weight per class");
      return cross_entropy(logits, one_hot<float>(labels, C), class_weights);
    case LossKind::Focal:
      return focal_loss(logits, labels, config.focal);
  }
  throw ConfigError("unknown loss");
}

EvalResult evaluate(const nn::Model& model, const data::Dataset& dataset, std::span<const std::size_t> indices,
                    const TrainConfig& config) {
  if (indices.empty()) throw ConfigError("evaluate: split is empty");
  const std::size_t C = model.config().num_classes;
  std::vector<double> weights;
  if (config.loss == LossKind::WeightedCrossEntropy) weights.assign(C, 1.0);
  EvalResult r{0.0, 0.0, ConfusionMatrix(C)};
  double loss_sum = 0.0;
  Prng unused(0, 0);
  for (std::size_t b = 0; b < indices.size(); b += config.batch_size) {
    const auto chunk = indices.subspan(b, std::min(config.batch_size, indices.size() - b));
    auto batch = data::make_batch(dataset, chunk, nullptr, unused, config.workers);
    const Var logits = model.forward(batch.images, Mode::Eval);
    const Var loss = compute_loss(logits, batch.labels, config, weights);
    loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(chunk.size());
    const auto pred = argmax_rows(logits.value());
    for (std::size_t i = 0; i < pred.size(); ++i) r.confusion.add(batch.labels[i], pred[i]);
  }
  r.loss = loss_sum / static_cast<double>(indices.size());
  r.accuracy = r.confusion.accuracy();
  return r;
}

EvalResult evaluate(const nn::Model& model, const data::Dataset& dataset, data::Split split,
                    const TrainConfig& config) {
  const auto idx = dataset.indices(split);
  if (idx.empty()) throw ConfigError("evaluate: no " + std::string(data::split_name(split)) + " records");
  return evaluate(model, dataset, idx, config);
}

Trainer::Trainer(nn::Model& model, const data::Dataset& dataset, TrainConfig config)
    : model_(model), dataset_(dataset), config_(std::move(config)) {
  train_ = dataset_.indices(data::Split::Train);
  val_ = dataset_.indices(data::Split::Val);
  if (train_.empty()) throw ConfigError("training split is empty");
  const std::size_t C = model_.config().num_classes;
  std::vector<data::SampleRecord> train_records;
  for (auto i : train_) train_records.push_back(dataset_.records[i]);
  const auto counts = data::label_counts(train_records, C);
  if (config_.sampler == SamplerKind::Weighted || config_.loss == LossKind::WeightedCrossEntropy) {
    class_weights_ = data::compute_class_weights(counts);
    sample_weights_ = data::per_sample_weights(train_records, class_weights_);
  }
  if (config_.loss == LossKind::WeightedCrossEntropy) {
    // Scaled to mean 1 so the loss stays on the unweighted scale.
    const double mean = std::accumulate(class_weights_.begin(), class_weights_.end(), 0.0) /
                        static_cast<double>(class_weights_.size());
    for (auto& w : class_weights_) w /= mean;
  }
}

std::size_t Trainer::steps_per_epoch() const {
  if (config_.steps_per_epoch > 0) return config_.steps_per_epoch;
  return (train_.size() + config_.batch_size - 1) / config_.batch_size;
}

std::vector<std::size_t> Trainer::epoch_indices(std::size_t epoch) const {
  const std::size_t n = steps_per_epoch() * config_.batch_size;
  std::vector<std::size_t> out;
  out.reserve(n);
  if (config_.sampler == SamplerKind::Weighted) {
    Prng rng = Prng::derive(config_.seed, "sampler", epoch);
    for (auto i : data::weighted_sample(sample_weights_, rng, n)) out.push_back(train_[i]);
    return out;
  }
  // Plain: concatenated seeded permutations of the training split.
  Prng rng = Prng::derive(config_.seed, "shuffle", epoch);
  while (out.size() < n) {
    std::vector<std::size_t> perm = train_;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.bounded(static_cast<std::uint32_t>(i))]);
    for (auto i : perm) {
      if (out.size() == n) break;
      out.push_back(i);
    }
  }
  return out;
}

EpochMetrics Trainer::train_epoch(std::size_t epoch) {
  EpochMetrics m;
  m.epoch = epoch;
  m.lr = lr_override_ ? *lr_override_ : lr_at_epoch(epoch, config_.base_lr, config_.lr_step, config_.lr_factor);
  const auto order = epoch_indices(epoch);
  const std::size_t steps = steps_per_epoch();
  // Without a custom step count the final batch holds the remainder.
  const std::size_t total = config_.steps_per_epoch > 0 ? order.size() : train_.size();
  double loss_sum = 0.0;
  std::size_t correct = 0, seen = 0;
  auto& params = model_.parameters();
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t begin = s * config_.batch_size;
    const std::size_t end = std::min(total, begin + config_.batch_size);
    if (begin >= end) break;
    const std::span<const std::size_t> idx(order.data() + begin, end - begin);
    Prng rng = Prng::derive(config_.seed, "batch", epoch_key(epoch, s));
    auto batch = data::make_batch(dataset_, idx, config_.augment ? &config_.augmentation : nullptr, rng,
                                  config_.workers);
    params.zero_grad();
    const Var logits = model_.forward(batch.images, Mode::Train);
    const Var loss = compute_loss(logits, batch.labels, config_, class_weights_);
    const double lv = loss.value()[0];
    if (!std::isfinite(lv)) {
      throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                         std::to_string(s));
    }
    backward(loss);
    adam_step(params, adam_, m.lr);
    loss_sum += lv * static_cast<double>(idx.size());
    const auto pred = argmax_rows(logits.value());
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch.labels[i] ? 1 : 0;
    seen += idx.size();
  }
  m.train_loss = loss_sum / static_cast<double>(seen);
  m.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
  if (val_.empty()) {
    m.val_loss = kNaN;
    m.val_acc = kNaN;
  } else {
    const auto v = evaluate(model_, dataset_, val_, config_);
    m.val_loss = v.loss;
    m.val_acc = v.accuracy;
  }
  return m;
}

nn::Model prepare_model(const TrainConfig& config, std::size_t num_classes) {
  TrainConfig c = config;
  c.num_classes = num_classes;
  Prng rng = Prng::derive(config.seed, "init");
  nn::Model model = nn::Model::build(c.architecture(), rng);
  if (config.checkpoint) {
    nn::load_checkpoint(model, *config.checkpoint, /*allow_head_mismatch=*/true);
    if (config.freeze) model.freeze_backbone();
  }
  return model;
}

FitResult fit(const TrainConfig& config, const data::Dataset& dataset) {
  const auto start = std::chrono::steady_clock::now();
  TrainConfig c = config;
  c.num_classes = dataset.num_classes;
  c.input_size = dataset.size;
  c.validate();
  FitResult out{RunRecord{}, prepare_model(c, c.num_classes)};
  RunRecord& rec = out.record;
  rec.config = c;
  Trainer trainer(out.model, dataset, c);
  try {
    for (std::size_t e = 0; e < c.epochs; ++e) rec.epochs.push_back(trainer.train_epoch(e));
  } catch (const NumericError& err) {
    rec.abort_reason = err.what();
  }
  if (!rec.epochs.empty()) {
    std::vector<double> tr, va;
    for (const auto& m : rec.epochs) {
      tr.push_back(m.train_acc);
      if (!std::isnan(m.val_acc)) va.push_back(m.val_acc);
    }
    rec.train_acc_avg = epoch_average_accuracy(tr);
    rec.final_train_acc = tr.back();
    if (!va.empty()) {
      rec.val_acc_avg = epoch_average_accuracy(va);
      rec.final_val_acc = va.back();
    }
  }
  if (!rec.abort_reason && !dataset.indices(data::Split::Test).empty()) {
    auto t = evaluate(out.model, dataset, data::Split::Test, c);
    rec.test_accuracy = t.accuracy;
    rec.test_confusion = t.confusion;
  }
  rec.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace xrn::train
