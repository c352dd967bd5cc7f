#pragma once

// Word-count benchmark: the same computation written by hand against the
// engine API and as a five-statement script, timed over a sweep of corpus
// sizes. A row is only recorded once both outputs are byte-identical.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "flowlatin/engine.hpp"
#include "flowlatin/jobs.hpp"

namespace flowlatin::bench {

namespace fs = std::filesystem;

/// The fixed 1,000-word lexicon the corpus draws from.
const std::vector<std::string>& lexicon();

/// Deterministic corpus of whitespace-separated lexicon words, between
/// size_kb*1024 - 8 and size_kb*1024 bytes, ending in a newline.
std::string generate_corpus(std::size_t size_kb, std::uint64_t seed);

/// Sequential reference: `word\tcount` lines sorted by word.
std::string wordcount_oracle(std::string_view text);

/// Hand-written mapper/combiner/reducer job. Throws IoError when `input`
/// cannot be read.
std::string wordcount_handwritten(const fs::path& input, const engine::EngineOptions& options);

/// Source text of the hand-written job, as compiled into the library.
std::string_view handwritten_source();

std::string wordcount_script_text(const fs::path& input, const fs::path& output);

/// Runs the script and returns the bytes it stored at `output`.
std::string wordcount_script(const fs::path& input, const fs::path& output,
                             const jobs::RunOptions& options);

/// Non-blank lines that are not entirely comment.
std::size_t count_loc(std::string_view source);
/// Statements in a script.
std::size_t count_statements(std::string_view script);

struct BenchRow {
  int turn = 0;
  std::string operation;
  std::size_t input_kb = 0;
  std::size_t loc_handwritten = 0;
  std::size_t loc_script = 0;
  std::int64_t t_handwritten_ms = 0;
  std::int64_t t_script_ms = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::string environment;
};

struct SweepOptions {
  std::vector<std::size_t> sizes_kb{13, 26, 52, 104, 208};
  int repetitions = 5;
  std::uint64_t seed = 7;
  std::size_t workers = 1;
  std::size_t split_bytes = engine::kDefaultSplitBytes;
  fs::path work_dir = ".flowwork/bench";
  /// Test hook: may alter the script output before the integrity check.
  std::function<void(std::string&)> tamper_script_output;
};

/// Median of the samples; an even count averages the middle pair, rounded
/// toward zero.
std::int64_t median(std::vector<std::int64_t> samples);

/// Throws BenchIntegrityError on an output mismatch, std::invalid_argument
/// on bad options.
BenchReport run_sweep(const SweepOptions& options);

std::string render_csv(const BenchReport& report);
std::string render_markdown(const BenchReport& report);
/// `input_kb,time_ms` for one implementation.
std::string render_series(const BenchReport& report, bool handwritten);

/// Writes bench.csv, bench.md, fig4.csv (hand-written) and fig5.csv
/// (script) into `dir`.
void write_report_files(const BenchReport& report, const fs::path& dir);

}  // namespace flowlatin::bench
