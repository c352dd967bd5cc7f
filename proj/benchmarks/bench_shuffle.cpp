#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "flowlatin/engine.hpp"

namespace {

using flowlatin::data::Value;
using flowlatin::engine::KeyValue;

std::vector<KeyValue> make_pairs(std::size_t n, std::size_t distinct) {
  std::mt19937_64 rng(42);
  std::vector<KeyValue> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto k = rng() % distinct;
    Value key = (k % 2 == 0) ? Value("w" + std::to_string(k)) : Value(static_cast<std::int64_t>(k));
    pairs.push_back({std::move(key), Value(static_cast<std::int64_t>(i))});
  }
  return pairs;
}

void BM_Shuffle(benchmark::State& state) {
  const auto pairs = make_pairs(static_cast<std::size_t>(state.range(0)), 1000);
  for (auto _ : state) {
    auto groups = flowlatin::engine::shuffle(pairs);
    benchmark::DoNotOptimize(groups.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Shuffle)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_ValueCodec(benchmark::State& state) {
  const auto pairs = make_pairs(10000, 5000);
  for (auto _ : state) {
    std::string buf;
    for (const auto& kv : pairs) flowlatin::engine::write_value(buf, kv.key);
    std::string_view in(buf);
    while (!in.empty()) benchmark::DoNotOptimize(flowlatin::engine::read_value(in));
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_ValueCodec);

}  // namespace
