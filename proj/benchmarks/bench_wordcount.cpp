#include <benchmark/benchmark.h>

#include <filesystem>

#include "flowlatin/bench.hpp"
#include "flowlatin/text.hpp"

namespace fs = std::filesystem;

namespace {

// One corpus file per size, written once and shared by every benchmark.
fs::path corpus(std::size_t kb) {
  auto dir = fs::temp_directory_path() / "flowlatin-bench";
  fs::create_directories(dir);
  auto path = dir / ("corpus-" + std::to_string(kb) + ".txt");
  if (!fs::exists(path)) flowlatin::text::write_file(path.string(), flowlatin::bench::generate_corpus(kb, 7));
  return path;
}

void BM_WordCountHandwritten(benchmark::State& state) {
  auto kb = static_cast<std::size_t>(state.range(0));
  auto input = corpus(kb);
  flowlatin::engine::EngineOptions opts;
  opts.spill_dir = input.parent_path();
  for (auto _ : state) benchmark::DoNotOptimize(flowlatin::bench::wordcount_handwritten(input, opts));
  state.SetBytesProcessed(state.iterations() * kb * 1024);
}

void BM_WordCountScript(benchmark::State& state) {
  auto kb = static_cast<std::size_t>(state.range(0));
  auto input = corpus(kb);
  flowlatin::jobs::RunOptions opts;
  opts.work_dir = input.parent_path() / "work";
  opts.job_log = false;
  auto output = input.parent_path() / "counts.txt";
  for (auto _ : state) benchmark::DoNotOptimize(flowlatin::bench::wordcount_script(input, output, opts));
  state.SetBytesProcessed(state.iterations() * kb * 1024);
}

BENCHMARK(BM_WordCountHandwritten)->Arg(13)->Arg(52)->Arg(208)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WordCountScript)->Arg(13)->Arg(52)->Arg(208)->Unit(benchmark::kMillisecond);

void BM_CorpusGeneration(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(flowlatin::bench::generate_corpus(208, 7));
}
BENCHMARK(BM_CorpusGeneration)->Unit(benchmark::kMillisecond);

}  // namespace
