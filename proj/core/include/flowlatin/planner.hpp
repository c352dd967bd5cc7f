#pragma once

// Compiles a schema-inferred LogicalPlan into a topologically ordered graph
// of map-reduce jobs.
//
// Load/Filter/Foreach chains fuse into the map pipeline of the job that
// reads them, or into the reduce-side post-ops of the job that produced
// their input when that chain is linear. Every Group, Join and Order opens
// exactly one shuffle job. A plan with no shuffle compiles to one map-only
// job per Store that needs one.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "flowlatin/schema.hpp"
#include "flowlatin/script.hpp"

namespace flowlatin::plan {

// --- per-record operators ---------------------------------------------------

struct DecodeStep {
  data::Schema schema;
  script::LoadFormat format = script::LoadFormat::Text;
};
struct FilterStep {
  script::ExprPtr predicate;
  data::Schema input;
};
struct GenerateStep {
  std::vector<script::GenerateItem> items;
  data::Schema input;
  data::Schema output;
};
/// Marks which side of a join a row came from.
struct TagStep {
  std::size_t tag = 0;
};
/// Extracts the shuffle key: the field itself for one key, a tuple otherwise.
struct KeyStep {
  std::vector<std::string> keys;
  data::Schema input;
};

using MapStep = std::variant<DecodeStep, FilterStep, GenerateStep, TagStep, KeyStep>;

/// One aggregate computed on the map side: `fn` over field `field` of the
/// pre-group row (no field for COUNT).
struct AggregateSpec {
  script::Builtin fn = script::Builtin::Count;
  std::optional<std::size_t> field;
  data::FieldType result;
};

// --- reduce operators ---------------------------------------------------------

struct NoReduce {};
/// Emits (group, bag of input rows).
struct GroupEmit {
  data::Schema value_schema;
};
/// Emits (group, agg0, agg1, ...) from merged partial aggregates.
struct AggregateReduce {
  std::vector<AggregateSpec> aggregates;
};
/// Per-key cross product of tagged left and right rows.
struct JoinMerge {
  data::Schema left;
  data::Schema right;
};
/// Emits every row in key order.
struct OrderEmit {
  bool descending = false;
};

using ReduceOp = std::variant<NoReduce, GroupEmit, AggregateReduce, JoinMerge, OrderEmit>;

struct JobInput {
  std::string dataset;
  std::vector<MapStep> map_ops;
};

struct JobSpec {
  std::size_t job_id = 0;
  std::vector<JobInput> inputs;
  /// Set when a combiner merges partial aggregates map-side.
  std::optional<std::vector<AggregateSpec>> combiner;
  ReduceOp reduce;
  /// Filter/Generate steps applied to reducer (or mapper) output rows.
  std::vector<MapStep> post_ops;
  std::string output;
  data::Schema output_schema;

  bool map_only() const { return std::holds_alternative<NoReduce>(reduce); }
};

enum class DatasetOrigin : std::uint8_t { Source, Job };

struct DatasetInfo {
  data::Schema schema;
  DatasetOrigin origin = DatasetOrigin::Source;
  /// Source path for LOADed data.
  std::string path;
  script::LoadFormat format = script::LoadFormat::Text;
  /// Producing job for intermediate data.
  std::size_t job = 0;
};

struct StoreBinding {
  std::string dataset;
  std::string path;
};

struct JobGraph {
  std::vector<JobSpec> jobs;
  std::map<std::string, DatasetInfo> datasets;
  std::vector<StoreBinding> stores;
};

struct CompileOptions {
  bool combiners = true;
};

/// Throws CompileError when the plan has no STORE. Infers schemas when the
/// plan has not been through infer_schemas yet.
JobGraph compile(const script::LogicalPlan& plan, const CompileOptions& options = {});

/// Rewrites GROUP-then-aggregate jobs into map-side partial aggregation with
/// a combiner. Jobs without combinable aggregates are left untouched.
JobGraph insert_combiners(JobGraph graph);

/// One line per job, then one line per store binding.
std::string explain(const JobGraph& graph);

std::string render_step(const MapStep& step);
std::string_view reduce_name(const ReduceOp& op);

/// Shuffle jobs in the graph (not counting map-only ones).
std::size_t shuffle_job_count(const JobGraph& graph);

}  // namespace flowlatin::plan
