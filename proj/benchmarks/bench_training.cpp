#include <benchmark/benchmark.h>

#include "w3ar/trainer.hpp"

namespace {

struct Setup {
  w3ar::ToyWorld world{w3ar::ToyWorldConfig{}};
  w3ar::ToyPolicy reference =
      w3ar::pretrain_supervised(w3ar::ToyPolicy::for_world(world), world, w3ar::PretrainConfig{});
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_SampleGroup(benchmark::State& state) {
  const auto& s = setup();
  w3ar::OptimizerConfig cfg;
  cfg.group_size = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(w3ar::sample_group(s.reference, s.world, w3ar::RewardConfig{},
                                                s.world.train_texts()[0], cfg, seed++));
  }
}
BENCHMARK(BM_SampleGroup)->Arg(8)->Arg(32);

void BM_SurrogateGradient(benchmark::State& state) {
  const auto& s = setup();
  w3ar::OptimizerConfig cfg;
  const auto rollout = w3ar::sample_group(s.reference, s.world, w3ar::RewardConfig{},
                                          s.world.train_texts()[0], cfg, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        w3ar::surrogate_gradient(s.reference, s.reference, s.world, rollout, cfg));
  }
}
BENCHMARK(BM_SurrogateGradient);

// Full training iterations: sample, score, update; excludes the eval passes.
void BM_TrainIterations(benchmark::State& state) {
  const auto& s = setup();
  w3ar::OptimizerConfig cfg;
  cfg.iterations = static_cast<std::size_t>(state.range(0));
  w3ar::TrainOptions opts;
  opts.eval_samples_per_text = 0;
  for (auto _ : state) {
    auto policy = s.reference;
    benchmark::DoNotOptimize(
        w3ar::train(policy, s.reference, s.world, w3ar::RewardConfig{}, cfg, opts));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainIterations)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
