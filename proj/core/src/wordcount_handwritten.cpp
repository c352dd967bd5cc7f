// Word count written directly against the engine's job API, the way a
// map-reduce program is written without the script layer: an explicit
// mapper, combiner and reducer, plus the driver that wires them up.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "flowlatin/bench.hpp"
#include "flowlatin/engine.hpp"
#include "flowlatin/error.hpp"
#include "flowlatin/text.hpp"

namespace flowlatin::bench {

namespace {

using engine::MapContext;
using data::Tuple;
using data::Value;

class WordCountMapper {
 public:
  void map(std::string_view line, MapContext& ctx) const {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && text::is_space(line[i])) {
        ++i;
      }
      std::size_t start = i;
      while (i < line.size() && !text::is_space(line[i])) {
        ++i;
      }
      if (i > start) {
        ctx.emit(Value(std::string(line.substr(start, i - start))), Value(std::int64_t{1}));
      }
    }
  }
};

std::int64_t sum_counts(const Value* begin, const Value* end) {
  std::int64_t total = 0;
  for (const Value* v = begin; v != end; ++v) {
    total += v->as_int();
  }
  return total;
}

class WordCountCombiner {
 public:
  void combine(const Value&, std::vector<Value>& values) const {
    if (values.size() < 2) {
      return;
    }
    std::int64_t total = sum_counts(values.data(), values.data() + values.size());
    values.assign(1, Value(total));
  }
};

class WordCountReducer {
 public:
  void reduce(const Value& word, std::span<const Value> counts, std::vector<Tuple>& out) const {
    std::int64_t total = sum_counts(counts.data(), counts.data() + counts.size());
    out.push_back(Tuple{word, Value(total)});
  }
};

std::string format_output(const std::vector<Tuple>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row[0].as_text();
    out += '\t';
    out += std::to_string(row[1].as_int());
    out += '\n';
  }
  return out;
}

}  // namespace

std::string wordcount_handwritten(const fs::path& input, const engine::EngineOptions& options) {
  auto bytes = std::make_shared<const std::string>(text::read_file(input.string()));

  auto mapper = std::make_shared<WordCountMapper>();
  auto combiner = std::make_shared<WordCountCombiner>();
  auto reducer = std::make_shared<WordCountReducer>();

  engine::ShuffleJob job;
  job.inputs.push_back(engine::MapInput{
      input.string(), bytes,
      [mapper](std::string_view record, MapContext& ctx) { mapper->map(record, ctx); }});
  job.combine = [combiner](const Value& key, std::vector<Value>& values) {
    combiner->combine(key, values);
  };
  job.reduce = [reducer](const Value& key, std::span<const Value> values, std::vector<Tuple>& out) {
    reducer->reduce(key, values, out);
  };

  engine::JobResult result = engine::run_shuffle_job(job, options);
  if (result.counters.combine_out != result.counters.grouped) {
    throw EngineError("word count lost records between map and reduce");
  }
  return format_output(result.rows);
}

}  // namespace flowlatin::bench
