#include <benchmark/benchmark.h>

#include "w3ar/reward.hpp"
#include "w3ar/rng.hpp"

namespace {

w3ar::AttentionMap random_map(std::size_t rows, std::size_t cols) {
  w3ar::Rng rng(1);
  w3ar::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (double& v : m.row(r)) sum += v = rng.uniform();
    for (double& v : m.row(r)) v /= sum;
  }
  return w3ar::validate_attention(std::move(m));
}

// Text tokens x encoder frames, roughly a short sentence against 30 s of audio.
void BM_TokenRewards(benchmark::State& state) {
  const auto map = random_map(state.range(0), state.range(1));
  const w3ar::RewardConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(w3ar::token_rewards(map, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_TokenRewards)->Args({16, 300})->Args({64, 1500})->Args({256, 1500});

void BM_ValidateAttention(benchmark::State& state) {
  const auto map = random_map(state.range(0), state.range(1));
  for (auto _ : state) {
    w3ar::Matrix copy = map.weights();
    benchmark::DoNotOptimize(w3ar::validate_attention(std::move(copy)));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0) * state.range(1) * sizeof(double));
}
BENCHMARK(BM_ValidateAttention)->Args({64, 1500});

}  // namespace
