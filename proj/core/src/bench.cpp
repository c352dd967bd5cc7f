#include "flowlatin/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>

#include "flowlatin/error.hpp"
#include "flowlatin/text.hpp"
#include "wordcount_source.inc"

namespace flowlatin::bench {

namespace {

// Each word is head + optional consonant + vowel tail. Heads are two
// letters and tails start with a vowel, so the split is unambiguous and all
// 1,000 combinations are distinct.
constexpr std::array<std::string_view, 10> kHeads{"ka", "lo", "mi", "nu", "pe",
                                                  "ra", "so", "ti", "vu", "ze"};
constexpr std::array<std::string_view, 10> kMiddles{"", "b", "d", "g", "l", "m", "n", "r", "s", "t"};
constexpr std::array<std::string_view, 10> kTails{"a", "e", "i", "o", "u", "an", "en", "in", "on", "un"};

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               since)
      .count();
}

std::string host_note() {
  auto hw = std::thread::hardware_concurrency();
  return "hardware threads " + std::to_string(hw);
}

}  // namespace

const std::vector<std::string>& lexicon() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> out;
    out.reserve(1000);
    for (auto h : kHeads) {
      for (auto m : kMiddles) {
        for (auto t : kTails) out.push_back(std::string(h) + std::string(m) + std::string(t));
      }
    }
    return out;
  }();
  return words;
}

std::string generate_corpus(std::size_t size_kb, std::uint64_t seed) {
  if (size_kb == 0) throw std::invalid_argument("corpus size must be at least 1 KB");
  const std::size_t target = size_kb * 1024;
  const auto& words = lexicon();
  // Raw engine output with modulo keeps the stream identical across
  // standard libraries, unlike the distribution adaptors.
  std::mt19937_64 rng(seed);
  std::string out;
  out.reserve(target);
  std::size_t on_line = 0;
  std::size_t line_len = 5 + rng() % 11;
  while (true) {
    const auto& w = words[rng() % words.size()];
    if (out.size() + w.size() + 1 > target) break;
    out += w;
    if (++on_line == line_len) {
      out += '\n';
      on_line = 0;
      line_len = 5 + rng() % 11;
    } else {
      out += ' ';
    }
  }
  if (!out.empty()) out.back() = '\n';
  return out;
}

std::string wordcount_oracle(std::string_view text) {
  std::map<std::string, std::int64_t, std::less<>> counts;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text::is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !text::is_space(text[j])) ++j;
    if (j > i) ++counts[std::string(text.substr(i, j - i))];
    i = j;
  }
  std::string out;
  for (const auto& [w, n] : counts) out += w + "\t" + std::to_string(n) + "\n";
  return out;
}

std::string_view handwritten_source() { return kHandwrittenSource; }

std::string wordcount_script_text(const fs::path& input, const fs::path& output) {
  auto quote = [](const fs::path& p) {
    std::string out = "'";
    for (char c : p.string()) {
      if (c == '\'' || c == '\\') out += '\\';
      out += c;
    }
    return out + "'";
  };
  return "lines = LOAD " + quote(input) + " AS (line:chararray);\n"
         "words = FOREACH lines GENERATE FLATTEN(TOKENIZE(line)) AS word;\n"
         "grouped = GROUP words BY word;\n"
         "counts = FOREACH grouped GENERATE group, COUNT(words);\n"
         "STORE counts INTO " + quote(output) + ";\n";
}

std::string wordcount_script(const fs::path& input, const fs::path& output,
                             const jobs::RunOptions& options) {
  jobs::execute_script(wordcount_script_text(input, output), options);
  return text::read_file(output.string());
}

std::size_t count_loc(std::string_view source) {
  std::size_t n = 0;
  bool in_block = false;
  for (auto line : text::lines(source)) {
    std::size_t i = 0;
    bool code = false;
    while (i < line.size()) {
      if (in_block) {
        auto end = line.find("*/", i);
        if (end == std::string_view::npos) break;
        in_block = false;
        i = end + 2;
        continue;
      }
      if (text::is_space(line[i])) {
        ++i;
      } else if (line.substr(i, 2) == "//") {
        break;
      } else if (line.substr(i, 2) == "/*") {
        in_block = true;
        i += 2;
      } else {
        code = true;
        break;
      }
    }
    if (code) ++n;
  }
  return n;
}

std::size_t count_statements(std::string_view script) {
  return script::parse_script(script).nodes.size();
}

std::int64_t median(std::vector<std::int64_t> samples) {
  if (samples.empty()) throw std::invalid_argument("median of no samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  if (samples.size() % 2 == 1) return samples[mid];
  return (samples[mid - 1] + samples[mid]) / 2;
}

BenchReport run_sweep(const SweepOptions& options) {
  if (options.sizes_kb.empty()) throw std::invalid_argument("sweep needs at least one size");
  if (!std::is_sorted(options.sizes_kb.begin(), options.sizes_kb.end()) ||
      std::adjacent_find(options.sizes_kb.begin(), options.sizes_kb.end()) != options.sizes_kb.end()) {
    throw std::invalid_argument("sweep sizes must be strictly ascending");
  }
  if (options.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

  fs::create_directories(options.work_dir);
  engine::EngineOptions eopts;
  eopts.workers = options.workers;
  eopts.split_bytes = options.split_bytes;
  eopts.spill_dir = options.work_dir / "spill";
  jobs::RunOptions ropts;
  ropts.workers = options.workers;
  ropts.split_bytes = options.split_bytes;
  ropts.work_dir = options.work_dir / "script";
  ropts.job_log = false;

  const auto input = options.work_dir / "corpus.txt";
  const auto output = options.work_dir / "counts.txt";
  const std::size_t loc_hand = count_loc(handwritten_source());
  const std::size_t loc_script = count_statements(wordcount_script_text(input, output));

  BenchReport report;
  report.environment = "workers " + std::to_string(options.workers) + ", split bytes " +
                       std::to_string(options.split_bytes) + ", repetitions " +
                       std::to_string(options.repetitions) + ", seed " +
                       std::to_string(options.seed) + ", " + host_note();
  int turn = 0;
  for (auto kb : options.sizes_kb) {
    text::write_file(input.string(), generate_corpus(kb, options.seed));
    std::vector<std::int64_t> t_hand, t_script;
    for (int r = 0; r < options.repetitions; ++r) {
      auto t0 = std::chrono::steady_clock::now();
      std::string hand = wordcount_handwritten(input, eopts);
      t_hand.push_back(elapsed_ms(t0));

      t0 = std::chrono::steady_clock::now();
      std::string scripted = wordcount_script(input, output, ropts);
      t_script.push_back(elapsed_ms(t0));

      if (options.tamper_script_output) options.tamper_script_output(scripted);
      if (hand != scripted) {
        throw BenchIntegrityError("word-count outputs differ at " + std::to_string(kb) +
                                  " KB (repetition " + std::to_string(r + 1) +
                                  "); timings discarded");
      }
    }
    report.rows.push_back({++turn, "Word-Count", kb, loc_hand, loc_script, median(t_hand),
                           median(t_script)});
  }
  std::error_code ec;
  fs::remove(input, ec);
  fs::remove(output, ec);
  fs::remove_all(ropts.work_dir, ec);
  return report;
}

std::string render_csv(const BenchReport& report) {
  std::string out = "turn,operation,input_kb,loc_handwritten,loc_script,t_handwritten_ms,t_script_ms\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.turn) + "," + r.operation + "," + std::to_string(r.input_kb) + "," +
           std::to_string(r.loc_handwritten) + "," + std::to_string(r.loc_script) + "," +
           std::to_string(r.t_handwritten_ms) + "," + std::to_string(r.t_script_ms) + "\n";
  }
  return out;
}

std::string render_markdown(const BenchReport& report) {
  std::size_t loc_hand = report.rows.empty() ? 0 : report.rows.front().loc_handwritten;
  std::size_t loc_script = report.rows.empty() ? 0 : report.rows.front().loc_script;
  std::string out = "| Turn | Operation | Input File Size (kb) | Time Taken by hand-written job (Lines of Code : " +
                    std::to_string(loc_hand) + ") | Time Taken by script (Lines of Code : " +
                    std::to_string(loc_script) + ") |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& r : report.rows) {
    out += "| " + std::to_string(r.turn) + " | " + r.operation + " | " + std::to_string(r.input_kb) +
           " kb | " + std::to_string(r.t_handwritten_ms) + " ms | " + std::to_string(r.t_script_ms) +
           " ms |\n";
  }
  out += "\nEnvironment: " + report.environment + "\n";
  return out;
}

std::string render_series(const BenchReport& report, bool handwritten) {
  std::string out = "input_kb,time_ms\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.input_kb) + "," +
           std::to_string(handwritten ? r.t_handwritten_ms : r.t_script_ms) + "\n";
  }
  return out;
}

void write_report_files(const BenchReport& report, const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
  text::write_file((dir / "bench.csv").string(), render_csv(report));
  text::write_file((dir / "bench.md").string(), render_markdown(report));
  text::write_file((dir / "fig4.csv").string(), render_series(report, true));
  text::write_file((dir / "fig5.csv").string(), render_series(report, false));
}

}  // namespace flowlatin::bench
