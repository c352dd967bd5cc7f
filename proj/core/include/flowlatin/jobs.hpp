#pragma once

// Executes compiled job graphs on the map-reduce engine.
//
// Intermediate datasets live under the work directory, one file per dataset
// id, in the exact row encoding. STORE targets are written in the text form
// after every job has succeeded; on failure nothing written by the run is
// left behind.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "flowlatin/engine.hpp"
#include "flowlatin/planner.hpp"

namespace flowlatin::jobs {

using data::Tuple;

struct RunOptions {
  std::size_t workers = 1;
  std::size_t split_bytes = engine::kDefaultSplitBytes;
  std::size_t memory_budget = engine::kDefaultMemoryBudget;
  std::filesystem::path work_dir = ".flowwork";
  /// Write STORE paths. Off when only the returned rows are wanted.
  bool write_stores = true;
  /// Append one JSON line per job to work_dir/jobs.jsonl.
  bool job_log = true;
};

struct JobReport {
  std::size_t job_id = 0;
  std::string output;
  engine::JobCounters counters;
};

struct RunResult {
  /// Rows of each STORE path, exactly typed, in output order.
  std::map<std::string, std::vector<Tuple>> stored;
  std::vector<JobReport> jobs;
};

/// Runs one job whose inputs are already available (sources on disk,
/// intermediates under work_dir) and writes its output dataset.
engine::JobResult run_job(const plan::JobSpec& job, const plan::JobGraph& graph,
                          const RunOptions& options);

/// Runs every job in order, then writes STORE outputs. The first failure is
/// rethrown after removing intermediates and stores written by this call.
RunResult run_graph(const plan::JobGraph& graph, const RunOptions& options);

/// parse, infer, compile (with combiners unless disabled), run.
RunResult execute_script(std::string_view source, const RunOptions& options,
                         const plan::CompileOptions& compile_options = {});

/// Reads a dataset file in the given format under `schema`.
std::vector<Tuple> read_dataset(const std::filesystem::path& path, const data::Schema& schema,
                                script::LoadFormat format);

/// Renders rows in the STORE text form, one line per row.
std::string render_rows(const std::vector<Tuple>& rows);

std::filesystem::path intermediate_path(const RunOptions& options, const std::string& dataset);

}  // namespace flowlatin::jobs
