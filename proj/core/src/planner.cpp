#include "flowlatin/planner.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>

#include "flowlatin/error.hpp"

namespace flowlatin::plan {

using script::LogicalPlan;
using script::LoadFormat;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex_id(std::string_view prefix, std::string_view content) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(content)));
  return std::string(prefix) + buf;
}

std::string_view format_name(LoadFormat f) { return f == LoadFormat::Text ? "text" : "exact"; }

std::string join_keys(const std::vector<std::string>& keys) {
  std::string out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) out += ", ";
    out += keys[i];
  }
  return out;
}

std::string render_aggregate(const AggregateSpec& a) {
  std::string out(script::builtin_name(a.fn));
  out += a.field ? "($" + std::to_string(*a.field) + ")" : "(*)";
  return out;
}

std::string render_aggregates(const std::vector<AggregateSpec>& aggs) {
  std::string out;
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    if (i) out += ", ";
    out += render_aggregate(aggs[i]);
  }
  return out;
}

std::string render_steps(const std::vector<MapStep>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += " | ";
    out += render_step(steps[i]);
  }
  return out;
}

std::string render_job(const JobSpec& job) {
  std::string out = "job " + std::to_string(job.job_id) + " " + std::string(reduce_name(job.reduce));
  for (const auto& in : job.inputs) {
    out += " in=" + in.dataset + "{" + render_steps(in.map_ops) + "}";
  }
  if (job.combiner) out += " combine=[" + render_aggregates(*job.combiner) + "]";
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, AggregateReduce>) {
          out += " reduce=[" + render_aggregates(r.aggregates) + "]";
        } else if constexpr (std::is_same_v<T, OrderEmit>) {
          if (r.descending) out += " desc";
        }
      },
      job.reduce);
  if (!job.post_ops.empty()) out += " post={" + render_steps(job.post_ops) + "}";
  out += " -> " + job.output;
  return out;
}

struct Stream {
  std::string dataset;
  std::vector<MapStep> ops;
  data::Schema schema;
  std::optional<std::size_t> open_job;
};

class Compiler {
 public:
  explicit Compiler(const LogicalPlan& plan) : plan_(plan) {}

  JobGraph run() {
    const auto n = plan_.nodes.size();
    std::vector<bool> live(n, false);
    for (std::size_t i = n; i-- > 0;) {
      if (std::holds_alternative<script::StoreOp>(plan_.nodes[i].op)) live[i] = true;
      if (!live[i]) continue;
      for (auto in : plan_.inputs_of(i)) live[in] = true;
    }
    consumers_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!live[i]) continue;
      for (auto in : plan_.inputs_of(i)) ++consumers_[in];
    }
    streams_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (live[i]) visit(i);
    }
    for (const auto& job : graph_.jobs) {
      DatasetInfo info;
      info.schema = job.output_schema;
      info.origin = DatasetOrigin::Job;
      info.format = LoadFormat::Exact;
      info.job = job.job_id;
      graph_.datasets[job.output] = info;
    }
    return std::move(graph_);
  }

 private:
  const data::Schema& schema_of(std::size_t node) const {
    const auto& s = plan_.nodes[node].schema;
    if (!s) throw CompileError("plan node without an inferred schema");
    return *s;
  }

  /// Ends the open job at this stream: later consumers read its output.
  void close(Stream& s) {
    if (!s.open_job) return;
    const auto& job = graph_.jobs[*s.open_job];
    s.dataset = job.output;
    s.ops = {DecodeStep{s.schema, LoadFormat::Exact}};
    s.open_job.reset();
  }

  JobSpec& new_job() {
    JobSpec job;
    job.job_id = graph_.jobs.size();
    job.output = "@" + std::to_string(job.job_id);
    graph_.jobs.push_back(std::move(job));
    return graph_.jobs.back();
  }

  void append(Stream& s, MapStep step, const data::Schema& out_schema) {
    if (s.open_job) {
      auto& job = graph_.jobs[*s.open_job];
      job.post_ops.push_back(std::move(step));
      job.output_schema = out_schema;
    } else {
      s.ops.push_back(std::move(step));
    }
    s.schema = out_schema;
  }

  JobInput shuffle_input(std::size_t node, const std::vector<std::string>& keys,
                         std::optional<std::size_t> tag) {
    Stream s = *streams_[node];
    close(s);
    JobInput in{s.dataset, s.ops};
    in.map_ops.push_back(KeyStep{keys, s.schema});
    if (tag) in.map_ops.push_back(TagStep{*tag});
    return in;
  }

  void open_shuffle(std::size_t i, std::vector<JobInput> inputs, ReduceOp reduce) {
    auto& job = new_job();
    job.inputs = std::move(inputs);
    job.reduce = std::move(reduce);
    job.output_schema = schema_of(i);
    streams_[i] = Stream{job.output, {}, schema_of(i), job.job_id};
  }

  void visit(std::size_t i) {
    const auto& node = plan_.nodes[i];
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, script::LoadOp>) {
            std::string id = hex_id("src-", op.path + "\n" + op.schema.to_string() + "\n" +
                                               std::string(format_name(op.format)));
            DatasetInfo info;
            info.schema = op.schema;
            info.path = op.path;
            info.format = op.format;
            graph_.datasets[id] = info;
            streams_[i] = Stream{id, {DecodeStep{op.schema, op.format}}, op.schema, std::nullopt};
          } else if constexpr (std::is_same_v<T, script::FilterOp>) {
            Stream s = input_stream(op.input);
            append(s, FilterStep{op.predicate, s.schema}, schema_of(i));
            streams_[i] = std::move(s);
          } else if constexpr (std::is_same_v<T, script::ForeachOp>) {
            Stream s = input_stream(op.input);
            append(s, GenerateStep{op.items, s.schema, schema_of(i)}, schema_of(i));
            streams_[i] = std::move(s);
          } else if constexpr (std::is_same_v<T, script::GroupOp>) {
            auto in = index_of(op.input);
            open_shuffle(i, {shuffle_input(in, op.keys, std::nullopt)}, GroupEmit{schema_of(in)});
          } else if constexpr (std::is_same_v<T, script::JoinOp>) {
            auto l = index_of(op.left);
            auto r = index_of(op.right);
            open_shuffle(i, {shuffle_input(l, op.left_keys, 0), shuffle_input(r, op.right_keys, 1)},
                         JoinMerge{schema_of(l), schema_of(r)});
          } else if constexpr (std::is_same_v<T, script::OrderOp>) {
            auto in = index_of(op.input);
            open_shuffle(i, {shuffle_input(in, op.keys, std::nullopt)}, OrderEmit{op.descending});
          } else {
            store(op);
          }
        },
        node.op);
    if (streams_[i] && consumers_[i] > 1) close(*streams_[i]);
  }

  std::size_t index_of(const std::string& alias) const { return plan_.aliases.at(alias); }

  Stream input_stream(const std::string& alias) const { return *streams_[index_of(alias)]; }

  void store(const script::StoreOp& op) {
    Stream s = input_stream(op.input);
    if (s.open_job) {
      graph_.stores.push_back({graph_.jobs[*s.open_job].output, op.path});
      return;
    }
    bool plain = s.ops.size() == 1 && std::holds_alternative<DecodeStep>(s.ops[0]) &&
                 !s.dataset.empty() && s.dataset.front() == '@';
    if (plain) {
      graph_.stores.push_back({s.dataset, op.path});
      return;
    }
    auto& job = new_job();
    job.inputs.push_back({s.dataset, s.ops});
    job.reduce = NoReduce{};
    job.output_schema = s.schema;
    graph_.stores.push_back({job.output, op.path});
  }

  const LogicalPlan& plan_;
  JobGraph graph_;
  std::vector<std::size_t> consumers_;
  std::vector<std::optional<Stream>> streams_;
};

void rename_dataset(JobGraph& graph, const std::string& from, const std::string& to) {
  for (auto& job : graph.jobs) {
    for (auto& in : job.inputs) {
      if (in.dataset == from) in.dataset = to;
    }
    if (job.output == from) job.output = to;
  }
  for (auto& s : graph.stores) {
    if (s.dataset == from) s.dataset = to;
  }
  auto node = graph.datasets.extract(from);
  if (!node.empty()) {
    node.key() = to;
    graph.datasets.insert(std::move(node));
  }
}

/// Replaces the "@<job>" placeholders with content-addressed ids. Job
/// descriptions include their (already renamed) inputs, so ids change
/// whenever anything upstream changes.
void assign_ids(JobGraph& graph) {
  for (auto& job : graph.jobs) {
    std::string placeholder = job.output;
    std::string id = hex_id("ds-", render_job(job));
    rename_dataset(graph, placeholder, id);
  }
}

// --- combiner rewrite ------------------------------------------------------

struct AggregateCollector {
  const data::Schema& group_schema;  // (group, bag)
  const data::Schema& value_schema;  // bag tuple schema
  std::vector<AggregateSpec> aggregates;
  bool ok = true;

  bool refers_to_bag(const script::FieldRef& ref) const {
    return script::resolve_field(group_schema, ref.name) == 1;
  }

  /// Returns the rewritten expression, or nullptr with ok = false.
  script::ExprPtr rewrite(const script::ExprPtr& e) {
    return std::visit(
        [&](const auto& x) -> script::ExprPtr {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, script::FieldRef>) {
            if (refers_to_bag(x)) ok = false;
            return e;
          } else if constexpr (std::is_same_v<T, script::Const>) {
            return e;
          } else if constexpr (std::is_same_v<T, script::Binary>) {
            auto l = rewrite(x.lhs);
            auto r = rewrite(x.rhs);
            return script::make_binary(x.op, l, r);
          } else {
            if (!script::is_aggregate(x.fn)) {
              std::vector<script::ExprPtr> args;
              for (const auto& a : x.args) args.push_back(rewrite(a));
              return script::make_call(x.fn, std::move(args));
            }
            const auto* ref = x.args.size() == 1 ? std::get_if<script::FieldRef>(&x.args[0]->node)
                                                 : nullptr;
            if (!ref || !refers_to_bag(*ref)) {
              ok = false;
              return e;
            }
            AggregateSpec spec;
            spec.fn = x.fn;
            if (ref->member) {
              spec.field = script::resolve_field(value_schema, *ref->member);
            } else if (x.fn != script::Builtin::Count) {
              if (value_schema.size() != 1) {
                ok = false;
                return e;
              }
              spec.field = 0;
            }
            spec.result = script::expr_type(*e, group_schema, true);
            std::size_t slot = aggregates.size();
            for (std::size_t k = 0; k < aggregates.size(); ++k) {
              if (aggregates[k].fn == spec.fn && aggregates[k].field == spec.field) slot = k;
            }
            if (slot == aggregates.size()) aggregates.push_back(spec);
            return script::make_field("$agg" + std::to_string(slot));
          }
        },
        e->node);
  }
};

}  // namespace

std::string render_step(const MapStep& step) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DecodeStep>) {
          return "decode[" + std::string(format_name(s.format)) + "](" + s.schema.to_string() + ")";
        } else if constexpr (std::is_same_v<T, FilterStep>) {
          return "filter(" + script::render_expr(*s.predicate) + ")";
        } else if constexpr (std::is_same_v<T, GenerateStep>) {
          std::string out = "generate(";
          for (std::size_t i = 0; i < s.items.size(); ++i) {
            if (i) out += ", ";
            out += script::render_expr(*s.items[i].expr);
            if (s.items[i].alias) out += " AS " + *s.items[i].alias;
          }
          return out + ")";
        } else if constexpr (std::is_same_v<T, TagStep>) {
          return "tag(" + std::to_string(s.tag) + ")";
        } else {
          return "key(" + join_keys(s.keys) + ")";
        }
      },
      step);
}

std::string_view reduce_name(const ReduceOp& op) {
  static constexpr std::string_view kNames[] = {"map-only", "group-emit", "aggregate",
                                                "join-merge", "order-emit"};
  return kNames[op.index()];
}

JobGraph compile(const LogicalPlan& plan, const CompileOptions& options) {
  if (plan.store_count() == 0) throw CompileError("script has no STORE; nothing to execute");
  bool inferred = std::all_of(plan.nodes.begin(), plan.nodes.end(),
                              [](const script::PlanNode& n) { return n.schema.has_value(); });
  JobGraph graph = inferred ? Compiler(plan).run() : Compiler(script::infer_schemas(plan)).run();
  if (options.combiners) graph = insert_combiners(std::move(graph));
  assign_ids(graph);
  return graph;
}

JobGraph insert_combiners(JobGraph graph) {
  for (auto& job : graph.jobs) {
    const auto* group = std::get_if<GroupEmit>(&job.reduce);
    if (!group || job.post_ops.empty()) continue;
    const auto* gen = std::get_if<GenerateStep>(&job.post_ops.front());
    if (!gen || gen->input.size() != 2) continue;

    AggregateCollector collector{gen->input, group->value_schema, {}, true};
    std::vector<script::GenerateItem> items;
    for (const auto& item : gen->items) {
      if (const auto* call = std::get_if<script::Call>(&item.expr->node);
          call && call->fn == script::Builtin::Flatten) {
        collector.ok = false;
        break;
      }
      items.push_back({collector.rewrite(item.expr), item.alias});
      if (!collector.ok) break;
    }
    if (!collector.ok || collector.aggregates.empty()) continue;

    data::Schema intermediate;
    intermediate.fields.push_back(gen->input.fields[0]);
    for (std::size_t k = 0; k < collector.aggregates.size(); ++k) {
      intermediate.fields.push_back({"$agg" + std::to_string(k), collector.aggregates[k].result});
    }
    GenerateStep rewritten{std::move(items), std::move(intermediate), gen->output};
    job.post_ops.front() = std::move(rewritten);
    job.combiner = collector.aggregates;
    job.reduce = AggregateReduce{std::move(collector.aggregates)};
  }
  return graph;
}

std::string explain(const JobGraph& graph) {
  std::string out;
  for (const auto& job : graph.jobs) out += render_job(job) + "\n";
  for (const auto& s : graph.stores) out += "store " + s.dataset + " -> '" + s.path + "'\n";
  return out;
}

std::size_t shuffle_job_count(const JobGraph& graph) {
  return static_cast<std::size_t>(std::count_if(graph.jobs.begin(), graph.jobs.end(),
                                                [](const JobSpec& j) { return !j.map_only(); }));
}

}  // namespace flowlatin::plan
