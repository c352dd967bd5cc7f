#include "flowlatin/jobs.hpp"

#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <variant>

#include "flowlatin/error.hpp"
#include "flowlatin/eval.hpp"
#include "flowlatin/text.hpp"

namespace flowlatin::jobs {

namespace fs = std::filesystem;
using data::Value;
using plan::AggregateReduce;
using plan::GroupEmit;
using plan::JoinMerge;
using plan::OrderEmit;

namespace {

struct DecodeOp {
  data::Schema schema;
  script::LoadFormat format;
};
struct FilterOp {
  eval::BoundExpr predicate;
};
struct GenerateOp {
  eval::Generator generator;
};
struct KeyOp {
  std::vector<std::size_t> fields;
};
struct TagOp {
  std::int64_t tag;
};

using Op = std::variant<DecodeOp, FilterOp, GenerateOp, KeyOp, TagOp>;

Op bind_step(const plan::MapStep& step) {
  return std::visit(
      [](const auto& s) -> Op {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, plan::DecodeStep>) {
          return DecodeOp{s.schema, s.format};
        } else if constexpr (std::is_same_v<T, plan::FilterStep>) {
          return FilterOp{eval::BoundExpr(*s.predicate, s.input)};
        } else if constexpr (std::is_same_v<T, plan::GenerateStep>) {
          return GenerateOp{eval::Generator(s.items, s.input)};
        } else if constexpr (std::is_same_v<T, plan::TagStep>) {
          return TagOp{static_cast<std::int64_t>(s.tag)};
        } else {
          KeyOp k;
          for (const auto& name : s.keys) k.fields.push_back(script::resolve_field(s.input, name));
          return k;
        }
      },
      step);
}

/// Row transforms (filter / generate) applied in order to a batch.
class RowPipeline {
 public:
  void add(Op op) { ops_.push_back(std::move(op)); }

  void apply(std::vector<Tuple>& rows) const {
    for (const auto& op : ops_) {
      if (rows.empty()) return;
      if (const auto* f = std::get_if<FilterOp>(&op)) {
        std::vector<Tuple> kept;
        for (auto& r : rows) {
          if (eval::truthy(f->predicate.evaluate(r))) kept.push_back(std::move(r));
        }
        rows = std::move(kept);
      } else if (const auto* g = std::get_if<GenerateOp>(&op)) {
        std::vector<Tuple> out;
        for (const auto& r : rows) g->generator.generate(r, out);
        rows = std::move(out);
      }
    }
  }

 private:
  std::vector<Op> ops_;
};

Value extract_key(const KeyOp& k, const Tuple& row) {
  if (k.fields.size() == 1) return row.at(k.fields[0]);
  Tuple t;
  for (auto f : k.fields) t.push_back(row.at(f));
  return t;
}

Tuple initial_partials(const std::vector<plan::AggregateSpec>& aggs, const Tuple& row) {
  Tuple out;
  out.reserve(aggs.size());
  for (const auto& a : aggs) out.push_back(eval::aggregate_init(a.fn, a.field ? row.at(*a.field) : Value(0)));
  return out;
}

Tuple merge_partials(const std::vector<plan::AggregateSpec>& aggs, std::span<const Value> values) {
  Tuple state = values.front().as_tuple();
  for (std::size_t i = 1; i < values.size(); ++i) {
    const auto& next = values[i].as_tuple();
    for (std::size_t k = 0; k < aggs.size(); ++k) {
      state[k] = eval::aggregate_merge(aggs[k].fn, state[k], next[k]);
    }
  }
  return state;
}

struct InputPlan {
  DecodeOp decode;
  RowPipeline rows;
  std::optional<KeyOp> key;
  std::optional<std::int64_t> tag;
};

InputPlan bind_input(const plan::JobInput& input) {
  InputPlan p;
  bool have_decode = false;
  for (const auto& step : input.map_ops) {
    Op op = bind_step(step);
    if (auto* d = std::get_if<DecodeOp>(&op)) {
      p.decode = std::move(*d);
      have_decode = true;
    } else if (auto* k = std::get_if<KeyOp>(&op)) {
      p.key = std::move(*k);
    } else if (auto* t = std::get_if<TagOp>(&op)) {
      p.tag = t->tag;
    } else {
      p.rows.add(std::move(op));
    }
  }
  if (!have_decode) throw EngineError("job input " + input.dataset + " has no decode step");
  return p;
}

std::optional<Tuple> decode_record(const DecodeOp& d, std::string_view record) {
  if (d.format == script::LoadFormat::Exact) return data::decode_row(record, d.schema);
  if (!record.empty() && record.back() == '\r') record.remove_suffix(1);
  if (record.empty()) return std::nullopt;
  auto cells = data::load_cells(record, d.schema);
  return data::coerce_row(cells, d.schema);
}

std::shared_ptr<const std::string> load_bytes(const plan::JobInput& input, const plan::JobGraph& graph,
                                              const RunOptions& options) {
  auto it = graph.datasets.find(input.dataset);
  if (it == graph.datasets.end()) throw EngineError("unknown dataset " + input.dataset);
  const auto& info = it->second;
  fs::path path = info.origin == plan::DatasetOrigin::Source ? fs::path(info.path)
                                                             : intermediate_path(options, input.dataset);
  return std::make_shared<const std::string>(text::read_file(path.string()));
}

engine::EngineOptions engine_options(const RunOptions& options) {
  engine::EngineOptions e;
  e.workers = options.workers;
  e.split_bytes = options.split_bytes;
  e.memory_budget = options.memory_budget;
  e.spill_dir = options.work_dir / "spill";
  return e;
}

void write_rows_exact(const fs::path& path, const std::vector<Tuple>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += data::encode_row(r);
    out += '\n';
  }
  text::write_file(path.string(), out);
}

void append_job_log(const RunOptions& options, const JobReport& report) {
  nlohmann::ordered_json line = {
      {"job_id", report.job_id},
      {"output", report.output},
      {"maps", report.counters.maps},
      {"records_in", report.counters.records_in},
      {"records_out", report.counters.records_out},
      {"wall_ms", report.counters.wall.count()},
  };
  std::ofstream log(options.work_dir / "jobs.jsonl", std::ios::app);
  if (!log) throw IoError("cannot append to job log in " + options.work_dir.string());
  log << line.dump() << '\n';
}

}  // namespace

fs::path intermediate_path(const RunOptions& options, const std::string& dataset) {
  return options.work_dir / dataset;
}

std::string render_rows(const std::vector<Tuple>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += data::render_row(r);
    out += '\n';
  }
  return out;
}

std::vector<Tuple> read_dataset(const fs::path& path, const data::Schema& schema,
                                script::LoadFormat format) {
  std::string bytes = text::read_file(path.string());
  std::vector<Tuple> rows;
  DecodeOp d{schema, format};
  for (auto line : text::lines(bytes)) {
    if (auto row = decode_record(d, line)) rows.push_back(std::move(*row));
  }
  return rows;
}

engine::JobResult run_job(const plan::JobSpec& job, const plan::JobGraph& graph,
                          const RunOptions& options) {
  auto post = std::make_shared<RowPipeline>();
  for (const auto& step : job.post_ops) post->add(bind_step(step));

  std::vector<engine::MapInput> inputs;
  for (const auto& in : job.inputs) {
    auto plan = std::make_shared<InputPlan>(bind_input(in));
    auto bytes = load_bytes(in, graph, options);
    engine::MapFn map;
    if (job.map_only()) {
      map = [plan, post](std::string_view record, engine::MapContext& ctx) {
        auto row = decode_record(plan->decode, record);
        if (!row) return;
        std::vector<Tuple> rows{std::move(*row)};
        plan->rows.apply(rows);
        post->apply(rows);
        for (auto& r : rows) ctx.emit_row(std::move(r));
      };
    } else {
      if (!plan->key) throw EngineError("shuffle input " + in.dataset + " has no key step");
      const auto* agg = std::get_if<AggregateReduce>(&job.reduce);
      std::optional<std::vector<plan::AggregateSpec>> aggs;
      if (agg) aggs = agg->aggregates;
      map = [plan, aggs](std::string_view record, engine::MapContext& ctx) {
        auto row = decode_record(plan->decode, record);
        if (!row) return;
        std::vector<Tuple> rows{std::move(*row)};
        plan->rows.apply(rows);
        for (auto& r : rows) {
          Value key = extract_key(*plan->key, r);
          if (aggs) {
            ctx.emit(std::move(key), initial_partials(*aggs, r));
          } else if (plan->tag) {
            ctx.emit(std::move(key), Tuple{Value(*plan->tag), Value(std::move(r))});
          } else {
            ctx.emit(std::move(key), Value(std::move(r)));
          }
        }
      };
    }
    inputs.push_back({in.dataset, std::move(bytes), std::move(map)});
  }

  auto eopts = engine_options(options);
  if (job.map_only()) return engine::run_map_only_job(engine::MapOnlyJob{std::move(inputs)}, eopts);

  engine::ShuffleJob sj;
  sj.inputs = std::move(inputs);
  if (job.combiner) {
    auto aggs = *job.combiner;
    sj.combine = [aggs](const Value&, std::vector<Value>& values) {
      if (values.size() < 2) return;
      Value merged = merge_partials(aggs, values);
      values.assign(1, std::move(merged));
    };
  }
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, GroupEmit>) {
          sj.reduce = [post](const Value& key, std::span<const Value> values, std::vector<Tuple>& out) {
            data::Bag bag;
            bag.tuples.reserve(values.size());
            for (const auto& v : values) bag.tuples.push_back(v.as_tuple());
            std::vector<Tuple> rows{Tuple{key, Value(std::move(bag))}};
            post->apply(rows);
            for (auto& row : rows) out.push_back(std::move(row));
          };
        } else if constexpr (std::is_same_v<T, AggregateReduce>) {
          auto aggs = r.aggregates;
          sj.reduce = [post, aggs](const Value& key, std::span<const Value> values,
                                   std::vector<Tuple>& out) {
            Tuple state = merge_partials(aggs, values);
            Tuple row{key};
            for (std::size_t k = 0; k < aggs.size(); ++k) {
              row.push_back(eval::aggregate_final(aggs[k].fn, state[k]));
            }
            std::vector<Tuple> rows{std::move(row)};
            post->apply(rows);
            for (auto& x : rows) out.push_back(std::move(x));
          };
        } else if constexpr (std::is_same_v<T, JoinMerge>) {
          sj.reduce = [post](const Value&, std::span<const Value> values, std::vector<Tuple>& out) {
            std::vector<const Tuple*> left, right;
            for (const auto& v : values) {
              const auto& tagged = v.as_tuple();
              (tagged.at(0).as_int() == 0 ? left : right).push_back(&tagged.at(1).as_tuple());
            }
            std::vector<Tuple> rows;
            rows.reserve(left.size() * right.size());
            for (const auto* l : left) {
              for (const auto* rr : right) {
                Tuple joined = *l;
                joined.insert(joined.end(), rr->begin(), rr->end());
                rows.push_back(std::move(joined));
              }
            }
            post->apply(rows);
            for (auto& x : rows) out.push_back(std::move(x));
          };
        } else if constexpr (std::is_same_v<T, OrderEmit>) {
          sj.single_partition = true;
          sj.descending = r.descending;
          sj.reduce = [post](const Value&, std::span<const Value> values, std::vector<Tuple>& out) {
            std::vector<Tuple> rows;
            rows.reserve(values.size());
            for (const auto& v : values) rows.push_back(v.as_tuple());
            post->apply(rows);
            for (auto& x : rows) out.push_back(std::move(x));
          };
        }
      },
      job.reduce);
  auto result = engine::run_shuffle_job(sj, eopts);
  return result;
}

RunResult run_graph(const plan::JobGraph& graph, const RunOptions& options) {
  RunResult result;
  std::vector<fs::path> written;
  std::map<std::string, std::vector<Tuple>> kept;
  for (const auto& s : graph.stores) kept[s.dataset];

  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
  };

  try {
    fs::create_directories(options.work_dir);
    for (const auto& job : graph.jobs) {
      auto out = run_job(job, graph, options);
      auto path = intermediate_path(options, job.output);
      written.push_back(path);
      write_rows_exact(path, out.rows);
      JobReport report{job.job_id, job.output, out.counters};
      if (options.job_log) append_job_log(options, report);
      result.jobs.push_back(report);
      if (auto it = kept.find(job.output); it != kept.end()) it->second = std::move(out.rows);
    }
    for (const auto& s : graph.stores) {
      const auto& rows = kept.at(s.dataset);
      if (options.write_stores) {
        fs::path target(s.path);
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        written.push_back(target);
        text::write_file(target.string(), render_rows(rows));
      }
      result.stored[s.path] = rows;
    }
  } catch (...) {
    cleanup();
    throw;
  }
  return result;
}

RunResult execute_script(std::string_view source, const RunOptions& options,
                         const plan::CompileOptions& compile_options) {
  auto logical = script::infer_schemas(script::parse_script(source));
  return run_graph(plan::compile(logical, compile_options), options);
}

}  // namespace flowlatin::jobs
