#include <benchmark/benchmark.h>

#include "cagan/networks.hpp"
#include "cagan/toy_dataset.hpp"
#include "cagan/trainer.hpp"

namespace cagan {
namespace {

constexpr Resolution kToy{48, 64};

nn::FeatureMap<float> noise_batch(int batch, std::uint64_t seed) {
  nn::FeatureMap<float> m(3, batch, kToy.height, kToy.width);
  Rng rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto& v : m.data) v = u(rng);
  return m;
}

void BM_GeneratorForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  GeneratorSpec spec;
  const Generator<float> g(spec, 1);
  const auto x = noise_batch(batch, 1);
  const auto y = noise_batch(batch, 2);
  const auto z = noise_batch(batch, 3);
  for (auto _ : state) benchmark::DoNotOptimize(g.forward(x, y, z));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_GeneratorForward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_DiscriminatorForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const Discriminator<float> d(DiscriminatorSpec::patch63(kToy, 16), 1);
  const auto x = noise_batch(batch, 1);
  const auto y = noise_batch(batch, 2);
  for (auto _ : state) benchmark::DoNotOptimize(d.forward(x, y));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DiscriminatorForward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  ToyDatasetSpec spec;
  spec.count = 32;
  spec.seed = 1;
  ToyDataset toy = synthesize_toy_dataset(spec);
  std::vector<ImageTensor> humans;
  std::vector<ImageTensor> articles;
  for (const auto& h : toy.humans) humans.push_back(normalize(h, RangeTag::UnitSigned));
  for (const auto& a : toy.articles) articles.push_back(normalize(a, RangeTag::UnitSigned));
  const Dataset dataset(toy.manifest, std::move(humans), std::move(articles));
  TrainConfig config;
  config.batch_size = static_cast<int>(state.range(0));
  TrainerState trainer = TrainerState::initialize(config);
  Rng rng(7);
  const TripletBatch batch = sample_triplets(dataset, config.batch_size, rng);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(trainer, batch));
  state.SetItemsProcessed(state.iterations() * config.batch_size);
}
BENCHMARK(BM_TrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cagan

BENCHMARK_MAIN();
