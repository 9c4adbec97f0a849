#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>

#include "xrn/data/dataset.hpp"
#include "xrn/data/synthetic.hpp"
#include "xrn/error.hpp"
#include "xrn/metrics.hpp"
#include "xrn/train/adam.hpp"
#include "xrn/train/config.hpp"
#include "xrn/train/run_record.hpp"
#include "xrn/train/schedule.hpp"
#include "xrn/train/trainer.hpp"

using namespace xrn;
using namespace xrn::train;
namespace fs = std::filesystem;

namespace {

data::Dataset small_dataset(std::size_t per_class, std::uint64_t seed, std::size_t size = 16) {
  data::SyntheticSpec spec;
  spec.train_per_class.fill(per_class);
  spec.test_per_class.fill(2);
  spec.size = size;
  spec.seed = seed;
  auto ds = data::from_synthetic(data::make_synthetic_dataset(spec));
  return ds;
}

TrainConfig small_config() {
  TrainConfig c = TrainConfig::from_preset("RCE");
  c.input_size = 16;
  c.batch_size = 4;
  c.epochs = 2;
  c.seed = 3;
  return c;
}

// Field-wise bit comparison, so NaN validation columns compare equal.
bool same_bits(const std::vector<EpochMetrics>& a, const std::vector<EpochMetrics>& b) {
  if (a.size() != b.size()) return false;
  auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].epoch != b[i].epoch || bits(a[i].lr) != bits(b[i].lr) || bits(a[i].train_loss) != bits(b[i].train_loss) ||
        bits(a[i].train_acc) != bits(b[i].train_acc) || bits(a[i].val_loss) != bits(b[i].val_loss) ||
        bits(a[i].val_acc) != bits(b[i].val_acc))
      return false;
  }
  return true;
}

std::vector<Tensor> snapshot(const nn::Model& m) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : m.state()) out.push_back(*t);
  return out;
}

}  // namespace

TEST(Schedule, StepValues) {
  for (std::size_t e = 0; e < 10; ++e) EXPECT_EQ(lr_at_epoch(e, 1e-3, 10, 0.5), 0.001);
  for (std::size_t e = 10; e < 20; ++e) EXPECT_EQ(lr_at_epoch(e, 1e-3, 10, 0.5), 0.0005);
  EXPECT_EQ(lr_at_epoch(0, 0.0123, 10, 0.5), 0.0123);
  EXPECT_DOUBLE_EQ(lr_at_epoch(25, 1e-3, 10, 0.5), 0.00025);
}

TEST(Schedule, ClosedFormAndMonotone) {
  for (std::size_t step : {1u, 3u, 10u})
    for (double f : {0.5, 0.1, 1.0}) {
      double prev = INFINITY;
      for (std::size_t e = 0; e < 60; ++e) {
        const double v = lr_at_epoch(e, 2e-3, step, f);
        EXPECT_DOUBLE_EQ(v, 2e-3 * std::pow(f, static_cast<double>(e / step)));
        EXPECT_LE(v, prev);
        prev = v;
      }
    }
}

TEST(Adam, SingleScalarHandValue) {
  nn::ParameterStore<float> store;
  store.add("w", Var::param(Tensor(Shape{1}, 1.0f)));
  store.at("w").mutable_grad() = Tensor(Shape{1}, 2.0f);
  AdamState<float> st;
  adam_step(store, st, 1e-3);
  EXPECT_EQ(st.t, 1u);
  // m_hat = 2, v_hat = 4: step is 0.001 * 2 / (2 + 1e-8).
  const float expected = static_cast<float>(1.0 - 0.001 * 2.0 / (2.0 + 1e-8));
  EXPECT_NEAR(store.at("w").value()[0], expected, 1e-7);
  EXPECT_NEAR(1.0 - store.at("w").value()[0], 0.0009999999950, 1e-7);
}

TEST(Adam, ZeroGradientIsIdentityAndFrozenUntouched) {
  Prng rng(1, 0);
  nn::ParameterStore<float> store;
  Tensor a(Shape{3, 4}), b(Shape{5});
  for (auto& v : a.data()) v = static_cast<float>(rng.uniform(-1, 1));
  for (auto& v : b.data()) v = static_cast<float>(rng.uniform(-1, 1));
  store.add("a", Var::param(a));
  store.add("b", Var::param(b));
  store.freeze("b");
  store.at("a").mutable_grad() = Tensor(Shape{3, 4}, 0.0f);
  store.at("b").mutable_grad() = Tensor(Shape{5}, 3.0f);
  AdamState<float> st;
  for (int i = 0; i < 5; ++i) adam_step(store, st, 1e-2);
  EXPECT_TRUE(bit_equal(store.at("a").value(), a));
  EXPECT_TRUE(bit_equal(store.at("b").value(), b));
  EXPECT_EQ(st.t, 5u);
  EXPECT_EQ(st.moments.count("b"), 0u);
}

TEST(Adam, FirstStepBoundedByLearningRate) {
  Prng rng(2, 0);
  for (int trial = 0; trial < 20; ++trial) {
    nn::ParameterStore<float> store;
    Tensor w(Shape{64});
    Tensor g(Shape{64});
    for (auto& v : w.data()) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : g.data()) v = static_cast<float>(rng.normal() * std::pow(10.0, rng.uniform(-4, 4)));
    store.add("w", Var::param(w));
    store.at("w").mutable_grad() = g;
    AdamState<float> st;
    const double lr = 1e-3;
    adam_step(store, st, lr);
    for (std::size_t i = 0; i < 64; ++i)
      EXPECT_LE(std::abs(static_cast<double>(store.at("w").value()[i]) - w[i]), lr * (1 + 1e-3) + 1e-7);
  }
}

TEST(Adam, NonFiniteGradientRejectedBeforeAnyChange) {
  nn::ParameterStore<float> store;
  store.add("a", Var::param(Tensor(Shape{2}, 1.0f)));
  store.add("b", Var::param(Tensor(Shape{2}, 1.0f)));
  store.at("a").mutable_grad() = Tensor(Shape{2}, 1.0f);
  store.at("b").mutable_grad() = Tensor(Shape{2}, std::vector<float>{1.0f, NAN});
  AdamState<float> st;
  EXPECT_THROW(adam_step(store, st, 1e-3), NumericError);
  EXPECT_EQ(store.at("a").value()[0], 1.0f);
  EXPECT_EQ(st.t, 0u);
}

TEST(Presets, TableResolution) {
  const auto& p = resolve_preset("PDCXFL");
  EXPECT_EQ(p.family, nn::Family::DenseNet);
  EXPECT_TRUE(p.uses_checkpoint);
  EXPECT_EQ(p.loss, LossKind::Focal);
  EXPECT_EQ(p.sampler, SamplerKind::Plain);
  EXPECT_EQ(resolve_preset("PRCW").code, "PRCEW");
  EXPECT_EQ(resolve_preset("prcew").sampler, SamplerKind::Weighted);
  EXPECT_EQ(resolve_preset("RCE").loss, LossKind::CrossEntropy);
  EXPECT_FALSE(resolve_preset("RFL").uses_checkpoint);
  try {
    resolve_preset("XYZ");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("PDCXCE"), std::string::npos);
  }
  EXPECT_EQ(presets().size(), 7u);
}

TEST(Config, ValidateRejectsTransferWithoutCheckpoint) {
  auto c = TrainConfig::from_preset("PDCXCE");
  EXPECT_THROW(c.validate(), ConfigError);
  c.checkpoint = fs::temp_directory_path() / "xrn_training_tests" / "absent.xrnc";
  fs::remove(*c.checkpoint);
  EXPECT_THROW(c.validate(), ConfigError);
  fs::create_directories(c.checkpoint->parent_path());
  write_text_file(*c.checkpoint, "placeholder");
  EXPECT_NO_THROW(c.validate());
  auto r = TrainConfig::from_preset("RCE");
  r.epochs = 0;
  EXPECT_THROW(r.validate(), ConfigError);
  r.epochs = 1;
  r.base_lr = 0;
  EXPECT_THROW(r.validate(), ConfigError);
}

TEST(Config, JsonLayering) {
  const auto base = TrainConfig::from_preset("RCE");
  const auto c = TrainConfig::from_json(R"({"epochs": 7, "seed": 11, "preset": "PRFL"})", base);
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.loss, LossKind::Focal);
  EXPECT_TRUE(c.uses_checkpoint);
  EXPECT_EQ(c.batch_size, base.batch_size);
  EXPECT_THROW(TrainConfig::from_json(R"({"epoch": 7})", base), ConfigError);
  const auto back = TrainConfig::from_json(c.to_json(), TrainConfig{});
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Trainer, ZeroLearningRateKeepsParametersBitIdentical) {
  const auto ds = small_dataset(3, 1);
  auto cfg = small_config();
  auto model = prepare_model(cfg, ds.num_classes);
  // Running statistics move in train mode; the check covers parameters only.
  std::vector<Tensor> before;
  for (const auto& e : model.parameters().entries()) before.push_back(e.var.value());
  Trainer t(model, ds, cfg);
  t.set_lr_override(0.0);
  const auto m = t.train_epoch(0);
  EXPECT_EQ(m.lr, 0.0);
  EXPECT_TRUE(std::isfinite(m.train_loss));
  EXPECT_GE(m.train_acc, 0.0);
  EXPECT_LE(m.train_acc, 1.0);
  const auto& entries = model.parameters().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) EXPECT_TRUE(bit_equal(entries[i].var.value(), before[i])) << entries[i].name;
}

TEST(Evaluate, AllOneClassEqualsPrevalence) {
  data::SyntheticSpec spec;
  spec.train_per_class = {2, 2, 2, 2};
  spec.test_per_class = {5, 1, 3, 1};
  spec.size = 16;
  spec.seed = 4;
  const auto ds = data::from_synthetic(data::make_synthetic_dataset(spec));
  auto cfg = small_config();
  auto model = prepare_model(cfg, 4);
  // Zero head weights and a dominant bias on class 2 force one prediction.
  auto& w = model.parameters().at("head.weight").mutable_value();
  for (auto& v : w.data()) v = 0.0f;
  auto& b = model.parameters().at("head.bias").mutable_value();
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = i == 2 ? 5.0f : 0.0f;
  const auto r = evaluate(model, ds, data::Split::Test, cfg);
  EXPECT_DOUBLE_EQ(r.accuracy, 3.0 / 10.0);
  EXPECT_EQ(r.confusion.count(0, 2), 5u);
  EXPECT_THROW(evaluate(model, ds, std::vector<std::size_t>{}, cfg), ConfigError);
}

TEST(Trainer, TwoEpochsDeterministic) {
  const auto ds = small_dataset(3, 2);
  auto cfg = small_config();
  auto run = [&] {
    auto model = prepare_model(cfg, ds.num_classes);
    Trainer t(model, ds, cfg);
    std::vector<EpochMetrics> out{t.train_epoch(0), t.train_epoch(1)};
    return std::make_pair(out, snapshot(model));
  };
  const auto a = run();
  const auto b = run();
  EXPECT_TRUE(same_bits(a.first, b.first));
  ASSERT_EQ(a.second.size(), b.second.size());
  for (std::size_t i = 0; i < a.second.size(); ++i) EXPECT_TRUE(bit_equal(a.second[i], b.second[i]));
}

TEST(Trainer, WeightedSamplerEqualizesExposure) {
  data::SyntheticSpec spec;
  spec.train_per_class = {40, 10, 20, 4};
  spec.size = 16;
  spec.seed = 5;
  const auto ds = data::from_synthetic(data::make_synthetic_dataset(spec));
  auto cfg = TrainConfig::from_preset("RCE");
  cfg.sampler = SamplerKind::Weighted;
  cfg.input_size = 16;
  cfg.batch_size = 16;
  cfg.steps_per_epoch = 50;
  auto model = prepare_model(cfg, 4);
  Trainer t(model, ds, cfg);
  const auto idx = t.epoch_indices(0);
  ASSERT_EQ(idx.size(), 50u * 16u);
  std::vector<double> freq(4, 0.0);
  for (auto i : idx) freq[static_cast<std::size_t>(ds.records[i].label)] += 1.0 / idx.size();
  for (double f : freq) EXPECT_NEAR(f, 0.25, 0.05);
  EXPECT_EQ(t.epoch_indices(0), idx);
  EXPECT_NE(t.epoch_indices(1), idx);
}

TEST(Trainer, PlainSamplerIsPermutation) {
  const auto ds = small_dataset(3, 6);
  auto cfg = small_config();
  auto model = prepare_model(cfg, 4);
  Trainer t(model, ds, cfg);
  auto idx = t.epoch_indices(0);
  const auto train = ds.indices(data::Split::Train);
  std::sort(idx.begin(), idx.end());
  EXPECT_EQ(idx, train);
  EXPECT_EQ(t.steps_per_epoch(), 3u);
}

TEST(Loss, WeightedCrossEntropyUsesMeanOneWeights) {
  data::SyntheticSpec spec;
  spec.train_per_class = {6, 3, 2, 1};
  spec.size = 16;
  const auto ds = data::from_synthetic(data::make_synthetic_dataset(spec));
  auto cfg = TrainConfig::from_preset("RCE");
  cfg.loss = LossKind::WeightedCrossEntropy;
  cfg.input_size = 16;
  auto model = prepare_model(cfg, 4);
  Trainer t(model, ds, cfg);
  const auto& w = t.class_weights();
  ASSERT_EQ(w.size(), 4u);
  double mean = 0;
  for (double v : w) mean += v / 4;
  EXPECT_NEAR(mean, 1.0, 1e-12);
  EXPECT_NEAR(w[3] / w[0], 6.0, 1e-12);
}

TEST(Fit, AbortReasonRecordedOnDivergence) {
  const auto ds = small_dataset(2, 7);
  auto cfg = small_config();
  cfg.base_lr = 1e30;
  cfg.epochs = 3;
  const auto r = fit(cfg, ds);
  ASSERT_TRUE(r.record.abort_reason.has_value());
  EXPECT_LT(r.record.epochs.size(), 3u);
}

TEST(Fit, RecordsEveryEpochAndExports) {
  auto ds = small_dataset(10, 8);
  data::carve_validation(ds, 0.1, 8);
  auto cfg = small_config();
  cfg.epochs = 3;
  const auto r = fit(cfg, ds);
  const auto& rec = r.record;
  ASSERT_FALSE(rec.abort_reason.has_value());
  ASSERT_EQ(rec.epochs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(rec.epochs[e].epoch, e);
    EXPECT_EQ(rec.epochs[e].lr, lr_at_epoch(e, cfg.base_lr, cfg.lr_step, cfg.lr_factor));
    EXPECT_TRUE(std::isfinite(rec.epochs[e].val_acc));
  }
  ASSERT_TRUE(rec.test_accuracy.has_value());
  ASSERT_TRUE(rec.val_acc_avg.has_value());

  const fs::path dir = fs::temp_directory_path() / "xrn_training_tests" / "export";
  fs::remove_all(dir);
  export_metrics(rec, dir);
  const auto text = read_text_file(dir / "metrics.csv");
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  EXPECT_EQ(lines, 4u);
  const auto parsed = parse_metrics_csv(text);
  EXPECT_EQ(parsed, rec.epochs);
  std::vector<double> acc;
  for (const auto& m : parsed) acc.push_back(m.train_acc);
  EXPECT_DOUBLE_EQ(rec.train_acc_avg, epoch_average_accuracy(acc));
  const auto summary = read_text_file(dir / "run.json");
  for (const char* key : {"\"preset\"", "\"seed\"", "\"epochs\"", "\"test_accuracy\"", "\"train_acc_avg\"",
                          "\"val_acc_avg\"", "\"epoch_metrics\""})
    EXPECT_NE(summary.find(key), std::string::npos) << key;
}

TEST(Fit, EmptyValidationGivesNaNColumns) {
  const auto ds = small_dataset(3, 9);
  auto cfg = small_config();
  cfg.epochs = 1;
  const auto r = fit(cfg, ds);
  EXPECT_TRUE(std::isnan(r.record.epochs[0].val_acc));
  EXPECT_FALSE(r.record.val_acc_avg.has_value());
  EXPECT_EQ(parse_metrics_csv(metrics_csv(r.record)).size(), 1u);
}

TEST(Fit, PresetTransferRequiresCheckpoint) {
  const auto ds = small_dataset(2, 10);
  auto cfg = TrainConfig::from_preset("PRCE");
  cfg.input_size = 16;
  EXPECT_THROW(fit(cfg, ds), ConfigError);
}
