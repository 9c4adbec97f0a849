#include <benchmark/benchmark.h>

#include "xrn/data/dataset.hpp"
#include "xrn/data/sampler.hpp"
#include "xrn/data/synthetic.hpp"
#include "xrn/losses.hpp"
#include "xrn/nn/model.hpp"
#include "xrn/ops.hpp"
#include "xrn/train/adam.hpp"

using namespace xrn;

namespace {

Tensor random_tensor(Shape s, Prng& rng) {
  Tensor t(std::move(s));
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

// args: batch, channels, spatial extent
void BM_ConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const auto hw = static_cast<std::size_t>(state.range(2));
  Prng rng(1, 0);
  Var x = Var::leaf(random_tensor(Shape{n, c, hw, hw}, rng));
  Var k = Var::leaf(random_tensor(Shape{c, c, 3, 3}, rng));
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k, Var{}, {1, 1}).value().data().data());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * c * c * hw * hw * 9));
}
BENCHMARK(BM_ConvForward)->Args({8, 16, 32})->Args({8, 32, 16})->Args({8, 64, 8});

void BM_ConvForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const auto hw = static_cast<std::size_t>(state.range(2));
  Prng rng(2, 0);
  Var x = Var::param(random_tensor(Shape{n, c, hw, hw}, rng));
  Var k = Var::param(random_tensor(Shape{c, c, 3, 3}, rng));
  for (auto _ : state) {
    backward(sum(conv2d(x, k, Var{}, {1, 1})));
  }
}
BENCHMARK(BM_ConvForwardBackward)->Args({8, 16, 32})->Args({8, 64, 8});

void BM_FocalLoss(benchmark::State& state) {
  Prng rng(3, 0);
  const std::size_t n = 256;
  Var z = Var::param(random_tensor(Shape{n, 4}, rng));
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.bounded(4));
  FocalParams fp;
  for (auto _ : state) backward(focal_loss(z, labels, fp));
}
BENCHMARK(BM_FocalLoss);

// One optimizer step of a mini model on an 8-image 64x64 batch; arg 0 selects
// the residual (0) or dense (1) family.
void BM_TrainStep(benchmark::State& state) {
  Prng rng(4, 0);
  auto cfg = state.range(0) == 0 ? nn::ArchitectureConfig::mini_resnet(4, 64) : nn::ArchitectureConfig::mini_densenet(4, 64);
  auto model = nn::Model::build(cfg, rng);
  const auto ds = data::from_synthetic(data::make_synthetic_dataset(2, 64, 4));
  std::vector<std::size_t> idx(8);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  train::AdamState<float> adam;
  for (auto _ : state) {
    const auto batch = data::make_batch(ds, idx, nullptr, rng);
    model.parameters().zero_grad();
    backward(cross_entropy(model.forward(batch.images, Mode::Train), one_hot<float>(batch.labels, 4)));
    train::adam_step(model.parameters(), adam, 1e-3);
  }
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_WeightedSample(benchmark::State& state) {
  std::vector<double> w(5929);
  Prng rng(5, 0);
  for (auto& v : w) v = rng.uniform(0.1, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(data::weighted_sample(w, rng, 1000));
}
BENCHMARK(BM_WeightedSample);

void BM_BatchAssembly(benchmark::State& state) {
  const auto ds = data::from_synthetic(data::make_synthetic_dataset(4, 64, 6));
  std::vector<std::size_t> idx(16);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  data::AugmentationConfig aug;
  Prng rng(6, 0);
  const auto workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(data::make_batch(ds, idx, &aug, rng, workers).labels.data());
}
BENCHMARK(BM_BatchAssembly)->Arg(1)->Arg(2);

}  // namespace

BENCHMARK_MAIN();
