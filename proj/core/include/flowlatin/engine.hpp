#pragma once

// Local parallel map-reduce runtime.
//
// Inputs are cut into record-aligned splits; a fixed worker pool runs one
// mapper per split. Shuffle jobs sort each mapper's output by key (stable, so
// emission order survives), optionally combine, hash-partition across
// reducers and k-way merge per partition. Values of one key reach the reducer
// ordered by (mapper ordinal, emission index), and reducer outputs are merged
// back in key order, so results do not depend on the worker count, the split
// size or thread scheduling.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowlatin/value.hpp"

namespace flowlatin::engine {

using data::Tuple;
using data::Value;

inline constexpr std::size_t kDefaultSplitBytes = 64 * 1024;
inline constexpr std::size_t kDefaultMemoryBudget = 64 * 1024 * 1024;

/// Half-open byte range [start, end) of one dataset, ending on a record
/// boundary (just after a '\n', or at end of data).
struct Split {
  std::string dataset;
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t ordinal = 0;

  friend bool operator==(const Split&, const Split&) = default;
};

/// Cuts `bytes` into splits of at least `target_split_bytes` (except the
/// last), each extended to the next record boundary. Empty input yields no
/// splits. Throws std::invalid_argument when target_split_bytes is 0.
std::vector<Split> split_input(std::string_view dataset, std::string_view bytes,
                               std::size_t target_split_bytes);

struct KeyValue {
  Value key;
  Value value;
};

using KeyGroup = std::pair<Value, std::vector<Value>>;

/// In-memory shuffle: keys strictly ascending, each key's values in input
/// order. Throws EngineError on a Bag key.
std::vector<KeyGroup> shuffle(std::vector<KeyValue> pairs);

struct EngineOptions {
  std::size_t workers = 1;
  std::size_t split_bytes = kDefaultSplitBytes;
  /// Buffered map output above this many (approximate) bytes, summed over
  /// running mappers, is sorted and spilled to `spill_dir`.
  std::size_t memory_budget = kDefaultMemoryBudget;
  std::filesystem::path spill_dir = std::filesystem::temp_directory_path();
};

class MapperTask;

/// Per-mapper output channel.
class MapContext {
 public:
  /// Shuffle jobs only. Throws EngineError for a Bag key.
  void emit(Value key, Value value);
  /// Map-only jobs only.
  void emit_row(Tuple row);

 private:
  friend class MapperTask;
  explicit MapContext(MapperTask& task) : task_(&task) {}
  MapperTask* task_;
};

using MapFn = std::function<void(std::string_view record, MapContext& ctx)>;

/// Replaces `values` (all sharing `key`) with partial aggregates. Must be
/// safe to apply to any contiguous run of a key's values.
using CombineFn = std::function<void(const Value& key, std::vector<Value>& values)>;

using ReduceFn =
    std::function<void(const Value& key, std::span<const Value> values, std::vector<Tuple>& out)>;

struct MapInput {
  std::string name;
  std::shared_ptr<const std::string> bytes;
  MapFn map;
};

struct JobCounters {
  std::size_t maps = 0;
  std::size_t records_in = 0;
  /// Pairs emitted by mappers, before any combiner.
  std::size_t map_emitted = 0;
  std::size_t combine_in = 0;
  std::size_t combine_out = 0;
  /// Pairs read back by reducers; equals combine_out with a combiner,
  /// map_emitted without.
  std::size_t shuffled = 0;
  std::size_t grouped = 0;
  std::size_t reduce_groups = 0;
  std::size_t records_out = 0;
  std::size_t spilled_runs = 0;
  std::chrono::milliseconds wall{0};
};

struct JobResult {
  std::vector<Tuple> rows;
  JobCounters counters;
};

struct ShuffleJob {
  std::vector<MapInput> inputs;
  CombineFn combine;  // optional
  ReduceFn reduce;
  /// Route every key to one reducer (ORDER).
  bool single_partition = false;
  /// Emit key groups in descending key order.
  bool descending = false;
};

struct MapOnlyJob {
  std::vector<MapInput> inputs;
};

/// Map failures surface as JobError(split ordinal, record byte offset);
/// reduce failures as JobError(partition, group index). Fail-fast.
JobResult run_shuffle_job(const ShuffleJob& job, const EngineOptions& options);
JobResult run_map_only_job(const MapOnlyJob& job, const EngineOptions& options);

// Binary self-describing value codec used for spill runs.
void write_value(std::string& out, const Value& v);
Value read_value(std::string_view& in);

}  // namespace flowlatin::engine
