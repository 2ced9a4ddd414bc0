#include <benchmark/benchmark.h>

#include "w3ar/dump_io.hpp"
#include "w3ar/rng.hpp"

namespace {

std::vector<std::uint8_t> random_dump(std::size_t rows, std::size_t cols) {
  w3ar::Rng rng(2);
  w3ar::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (double& v : m.row(r)) sum += v = rng.uniform();
    for (double& v : m.row(r)) v /= sum;
  }
  return w3ar::encode_attn_dump(w3ar::validate_attention(std::move(m)));
}

void BM_DecodeDump(benchmark::State& state) {
  const auto bytes = random_dump(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(w3ar::decode_attn_dump(bytes));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_DecodeDump)->Args({16, 300})->Args({64, 1500});

void BM_EncodeDump(benchmark::State& state) {
  const auto map = w3ar::decode_attn_dump(random_dump(state.range(0), state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(w3ar::encode_attn_dump(map));
}
BENCHMARK(BM_EncodeDump)->Args({64, 1500});

}  // namespace
