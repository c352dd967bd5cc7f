#include "flowlatin/engine.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <thread>

#include "flowlatin/error.hpp"

namespace flowlatin::engine {

std::vector<Split> split_input(std::string_view dataset, std::string_view bytes,
                               std::size_t target_split_bytes) {
  if (target_split_bytes == 0) throw std::invalid_argument("target_split_bytes must be >= 1");
  std::vector<Split> out;
  std::size_t start = 0;
  while (start < bytes.size()) {
    std::size_t end = std::min(bytes.size(), start + target_split_bytes);
    if (end < bytes.size()) {
      // Extend to just past the record terminator at or after end - 1.
      auto nl = bytes.find('\n', end - 1);
      end = nl == std::string_view::npos ? bytes.size() : nl + 1;
    }
    out.push_back(Split{std::string(dataset), start, end, out.size()});
    start = end;
  }
  return out;
}

namespace {

void check_key(const Value& key) {
  if (key.kind() == data::ValueKind::Bag) throw EngineError("shuffle key must not be a bag");
}

bool key_less(const KeyValue& a, const KeyValue& b) { return data::compare(a.key, b.key) < 0; }

}  // namespace

std::vector<KeyGroup> shuffle(std::vector<KeyValue> pairs) {
  for (const auto& kv : pairs) check_key(kv.key);
  std::stable_sort(pairs.begin(), pairs.end(), key_less);
  std::vector<KeyGroup> out;
  for (auto& kv : pairs) {
    if (out.empty() || data::compare(out.back().first, kv.key) != 0) {
      out.emplace_back(std::move(kv.key), std::vector<Value>{});
    }
    out.back().second.push_back(std::move(kv.value));
  }
  return out;
}

// --- binary codec ----------------------------------------------------------

namespace {

enum class Tag : std::uint8_t { Int = 0, Float = 1, Text = 2, Tuple = 3, Bag = 4 };

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t get_u64(std::string_view& in) {
  if (in.size() < 8) throw EngineError("truncated spill record");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(in[i])} << (8 * i);
  in.remove_prefix(8);
  return v;
}
std::uint32_t get_u32(std::string_view& in) {
  if (in.size() < 4) throw EngineError("truncated spill record");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(in[i])} << (8 * i);
  in.remove_prefix(4);
  return v;
}

void write_tuple(std::string& out, const Tuple& t) {
  put_u32(out, static_cast<std::uint32_t>(t.size()));
  for (const auto& e : t) write_value(out, e);
}

Tuple read_tuple(std::string_view& in) {
  auto n = get_u32(in);
  Tuple t;
  t.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) t.push_back(read_value(in));
  return t;
}

}  // namespace

void write_value(std::string& out, const Value& v) {
  switch (v.kind()) {
    case data::ValueKind::Int:
      out.push_back(static_cast<char>(Tag::Int));
      put_u64(out, static_cast<std::uint64_t>(v.as_int()));
      break;
    case data::ValueKind::Float:
      out.push_back(static_cast<char>(Tag::Float));
      put_u64(out, std::bit_cast<std::uint64_t>(v.as_float()));
      break;
    case data::ValueKind::CharArray:
      out.push_back(static_cast<char>(Tag::Text));
      put_u32(out, static_cast<std::uint32_t>(v.as_text().size()));
      out += v.as_text();
      break;
    case data::ValueKind::Tuple:
      out.push_back(static_cast<char>(Tag::Tuple));
      write_tuple(out, v.as_tuple());
      break;
    case data::ValueKind::Bag:
      out.push_back(static_cast<char>(Tag::Bag));
      put_u32(out, static_cast<std::uint32_t>(v.as_bag().tuples.size()));
      for (const auto& t : v.as_bag().tuples) write_tuple(out, t);
      break;
  }
}

Value read_value(std::string_view& in) {
  if (in.empty()) throw EngineError("truncated spill record");
  auto tag = static_cast<Tag>(in.front());
  in.remove_prefix(1);
  switch (tag) {
    case Tag::Int: return Value(static_cast<std::int64_t>(get_u64(in)));
    case Tag::Float: return Value(std::bit_cast<double>(get_u64(in)));
    case Tag::Text: {
      auto n = get_u32(in);
      if (in.size() < n) throw EngineError("truncated spill record");
      std::string s(in.substr(0, n));
      in.remove_prefix(n);
      return Value(std::move(s));
    }
    case Tag::Tuple: return Value(read_tuple(in));
    case Tag::Bag: {
      auto n = get_u32(in);
      data::Bag bag;
      bag.tuples.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) bag.tuples.push_back(read_tuple(in));
      return Value(std::move(bag));
    }
  }
  throw EngineError("corrupt spill record tag");
}

// --- execution -------------------------------------------------------------

namespace {

/// A sorted run of one mapper's output for one partition, either kept in
/// memory or spilled to a file of length-prefixed records.
struct Run {
  std::vector<KeyValue> memory;
  std::filesystem::path file;
  std::size_t count = 0;
};

class RunCursor {
 public:
  explicit RunCursor(Run& run) : run_(run) {
    if (!run_.file.empty()) {
      in_.open(run_.file, std::ios::binary);
      if (!in_) throw EngineError("cannot reopen spill run " + run_.file.string());
    }
    advance();
  }

  bool done() const { return done_; }
  KeyValue& current() { return current_; }

  void advance() {
    if (run_.file.empty()) {
      if (index_ >= run_.memory.size()) {
        done_ = true;
        return;
      }
      current_ = std::move(run_.memory[index_++]);
      return;
    }
    if (index_ >= run_.count) {
      done_ = true;
      return;
    }
    char len_bytes[4];
    in_.read(len_bytes, 4);
    std::string_view lv(len_bytes, 4);
    auto len = get_u32(lv);
    buffer_.resize(len);
    in_.read(buffer_.data(), len);
    if (!in_) throw EngineError("truncated spill run " + run_.file.string());
    std::string_view body(buffer_);
    current_.key = read_value(body);
    current_.value = read_value(body);
    ++index_;
  }

 private:
  Run& run_;
  std::ifstream in_;
  std::string buffer_;
  KeyValue current_;
  std::size_t index_ = 0;
  bool done_ = false;
};

/// Runs `fn(i)` for i in [0, n) on `workers` threads. The first exception
/// stops remaining tasks and is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, std::atomic<bool>& stop, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto body = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };
  std::size_t threads = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(body);
  }
  if (first) std::rethrow_exception(first);
}

std::atomic<std::uint64_t> g_job_sequence{0};

struct SplitRef {
  const MapInput* input;
  Split split;
};

std::vector<SplitRef> plan_splits(const std::vector<MapInput>& inputs, std::size_t split_bytes) {
  std::vector<SplitRef> out;
  for (const auto& in : inputs) {
    if (!in.bytes) throw EngineError("input '" + in.name + "' has no data");
    for (auto& s : split_input(in.name, *in.bytes, split_bytes)) {
      s.ordinal = out.size();
      out.push_back({&in, std::move(s)});
    }
  }
  return out;
}

class SpillFiles {
 public:
  ~SpillFiles() {
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f, ec);
  }
  void add(std::filesystem::path p) {
    std::lock_guard lock(mu_);
    files_.push_back(std::move(p));
  }

 private:
  std::mutex mu_;
  std::vector<std::filesystem::path> files_;
};

}  // namespace

class MapperTask {
 public:
  struct Config {
    bool shuffle = false;
    std::size_t partitions = 1;
    std::size_t budget = kDefaultMemoryBudget;
    const CombineFn* combine = nullptr;
    std::filesystem::path spill_prefix;
    SpillFiles* spills = nullptr;
  };

  MapperTask(Config config, std::size_t ordinal) : cfg_(std::move(config)), ordinal_(ordinal) {
    runs_.resize(cfg_.partitions);
  }

  void run(const SplitRef& ref, const std::atomic<bool>& stop) {
    std::string_view data = *ref.input->bytes;
    MapContext ctx(*this);
    std::size_t pos = ref.split.start;
    while (pos < ref.split.end) {
      if (stop.load(std::memory_order_relaxed)) return;
      auto nl = data.find('\n', pos);
      std::size_t stop_at = (nl == std::string_view::npos || nl >= ref.split.end) ? ref.split.end : nl;
      std::string_view record = data.substr(pos, stop_at - pos);
      ++records_in_;
      try {
        ref.input->map(record, ctx);
      } catch (const Error& e) {
        throw JobError(ref.split.ordinal, pos, e.what());
      } catch (const std::exception& e) {
        throw JobError(ref.split.ordinal, pos, e.what());
      }
      pos = stop_at + 1;
    }
    if (cfg_.shuffle && !buffer_.empty()) flush(false);
  }

  void emit(Value key, Value value) {
    if (!cfg_.shuffle) throw EngineError("emit(key, value) called in a map-only job");
    check_key(key);
    buffer_bytes_ += data::approximate_bytes(key) + data::approximate_bytes(value);
    buffer_.push_back({std::move(key), std::move(value)});
    ++emitted_raw_;
    if (buffer_bytes_ > cfg_.budget) flush(true);
  }

  void emit_row(Tuple row) {
    if (cfg_.shuffle) throw EngineError("emit_row called in a shuffle job");
    rows_.push_back(std::move(row));
  }

  std::vector<std::vector<Run>>& runs() { return runs_; }
  std::vector<Tuple>& rows() { return rows_; }
  std::size_t records_in() const { return records_in_; }
  std::size_t emitted_raw() const { return emitted_raw_; }
  std::size_t emitted() const { return emitted_; }
  std::size_t spilled() const { return spilled_; }

 private:
  void flush(bool spill) {
    std::stable_sort(buffer_.begin(), buffer_.end(), key_less);
    if (cfg_.combine && *cfg_.combine) combine();
    std::vector<std::vector<KeyValue>> parts(cfg_.partitions);
    for (auto& kv : buffer_) {
      std::size_t p = cfg_.partitions == 1 ? 0 : data::hash_value(kv.key) % cfg_.partitions;
      parts[p].push_back(std::move(kv));
    }
    emitted_ += buffer_.size();
    buffer_.clear();
    buffer_bytes_ = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      if (parts[p].empty()) continue;
      Run run;
      run.count = parts[p].size();
      if (spill) {
        run.file = cfg_.spill_prefix;
        run.file += "-m" + std::to_string(ordinal_) + "-r" + std::to_string(seq_) + "-p" +
                    std::to_string(p) + ".run";
        write_run(run.file, parts[p]);
        cfg_.spills->add(run.file);
        ++spilled_;
      } else {
        run.memory = std::move(parts[p]);
      }
      runs_[p].push_back(std::move(run));
    }
    ++seq_;
  }

  void combine() {
    std::vector<KeyValue> out;
    out.reserve(buffer_.size());
    std::size_t i = 0;
    while (i < buffer_.size()) {
      std::size_t j = i + 1;
      while (j < buffer_.size() && data::compare(buffer_[i].key, buffer_[j].key) == 0) ++j;
      std::vector<Value> values;
      values.reserve(j - i);
      for (std::size_t k = i; k < j; ++k) values.push_back(std::move(buffer_[k].value));
      (*cfg_.combine)(buffer_[i].key, values);
      for (auto& v : values) out.push_back({buffer_[i].key, std::move(v)});
      i = j;
    }
    buffer_ = std::move(out);
  }

  static void write_run(const std::filesystem::path& file, const std::vector<KeyValue>& kvs) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw EngineError("cannot create spill run " + file.string());
    std::string record;
    std::string len;
    for (const auto& kv : kvs) {
      record.clear();
      write_value(record, kv.key);
      write_value(record, kv.value);
      len.clear();
      put_u32(len, static_cast<std::uint32_t>(record.size()));
      out.write(len.data(), 4);
      out.write(record.data(), static_cast<std::streamsize>(record.size()));
    }
    if (!out) throw EngineError("error writing spill run " + file.string());
  }

  Config cfg_;
  std::size_t ordinal_;
  std::vector<KeyValue> buffer_;
  std::size_t buffer_bytes_ = 0;
  std::vector<std::vector<Run>> runs_;
  std::vector<Tuple> rows_;
  std::size_t records_in_ = 0;
  std::size_t emitted_raw_ = 0;
  std::size_t emitted_ = 0;
  std::size_t spilled_ = 0;
  std::size_t seq_ = 0;
};

void MapContext::emit(Value key, Value value) { task_->emit(std::move(key), std::move(value)); }
void MapContext::emit_row(Tuple row) { task_->emit_row(std::move(row)); }

namespace {

struct PartitionOutput {
  std::vector<std::pair<Value, std::vector<Tuple>>> groups;
  std::size_t consumed = 0;
  std::size_t grouped = 0;
};

PartitionOutput reduce_partition(std::size_t partition, std::vector<Run*> runs,
                                 const ReduceFn& reduce, const std::atomic<bool>& stop) {
  PartitionOutput out;
  std::vector<std::unique_ptr<RunCursor>> cursors;
  cursors.reserve(runs.size());
  for (Run* r : runs) cursors.push_back(std::make_unique<RunCursor>(*r));

  // Min-heap on (key, cursor index); cursor index encodes (mapper, run seq).
  auto greater = [&](std::size_t a, std::size_t b) {
    auto c = data::compare(cursors[a]->current().key, cursors[b]->current().key);
    if (c != 0) return c > 0;
    return a > b;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> heap(greater);
  for (std::size_t i = 0; i < cursors.size(); ++i) {
    if (!cursors[i]->done()) heap.push(i);
  }

  std::vector<Value> values;
  while (!heap.empty()) {
    if (stop.load(std::memory_order_relaxed)) return out;
    std::size_t top = heap.top();
    heap.pop();
    Value key = cursors[top]->current().key;
    values.clear();
    auto take = [&](std::size_t c) {
      values.push_back(std::move(cursors[c]->current().value));
      ++out.consumed;
      cursors[c]->advance();
      if (!cursors[c]->done()) heap.push(c);
    };
    take(top);
    while (!heap.empty() && data::compare(cursors[heap.top()]->current().key, key) == 0) {
      std::size_t c = heap.top();
      heap.pop();
      take(c);
    }
    out.grouped += values.size();
    std::vector<Tuple> rows;
    try {
      reduce(key, values, rows);
    } catch (const std::exception& e) {
      throw JobError(partition, out.groups.size(), std::string("reduce: ") + e.what());
    }
    out.groups.emplace_back(std::move(key), std::move(rows));
  }
  return out;
}

}  // namespace

JobResult run_shuffle_job(const ShuffleJob& job, const EngineOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  if (!job.reduce) throw EngineError("shuffle job without a reducer");
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  const std::size_t partitions = job.single_partition ? 1 : workers;
  auto splits = plan_splits(job.inputs, options.split_bytes);

  SpillFiles spills;
  std::filesystem::path prefix =
      options.spill_dir / ("spill-" + std::to_string(g_job_sequence.fetch_add(1)) + "-" +
                           std::to_string(reinterpret_cast<std::uintptr_t>(&spills)));
  MapperTask::Config cfg;
  cfg.shuffle = true;
  cfg.partitions = partitions;
  cfg.budget = std::max<std::size_t>(1, options.memory_budget / workers);
  cfg.combine = &job.combine;
  cfg.spill_prefix = prefix;
  cfg.spills = &spills;

  std::vector<std::unique_ptr<MapperTask>> mappers;
  for (std::size_t i = 0; i < splits.size(); ++i) mappers.push_back(std::make_unique<MapperTask>(cfg, i));

  std::atomic<bool> stop{false};
  if (!splits.empty() && std::any_of(splits.begin(), splits.end(), [](const SplitRef& s) {
        return s.split.end > s.split.start;
      })) {
    std::error_code ec;
    std::filesystem::create_directories(options.spill_dir, ec);
  }
  parallel_for(splits.size(), workers, stop, [&](std::size_t i) { mappers[i]->run(splits[i], stop); });

  JobResult result;
  auto& c = result.counters;
  c.maps = splits.size();
  for (const auto& m : mappers) {
    c.records_in += m->records_in();
    c.map_emitted += m->emitted_raw();
    c.combine_in += job.combine ? m->emitted_raw() : 0;
    c.combine_out += job.combine ? m->emitted() : 0;
    c.spilled_runs += m->spilled();
  }

  std::vector<PartitionOutput> outputs(partitions);
  parallel_for(partitions, workers, stop, [&](std::size_t p) {
    std::vector<Run*> runs;
    for (auto& m : mappers) {
      for (auto& r : m->runs()[p]) runs.push_back(&r);
    }
    outputs[p] = reduce_partition(p, std::move(runs), job.reduce, stop);
  });

  std::vector<std::pair<Value, std::vector<Tuple>>> groups;
  for (auto& o : outputs) {
    c.shuffled += o.consumed;
    c.grouped += o.grouped;
    for (auto& g : o.groups) groups.push_back(std::move(g));
  }
  const std::size_t sent = job.combine ? c.combine_out : c.map_emitted;
  if (c.shuffled != sent || c.grouped != sent) {
    throw EngineError("exactly-once violated: sent " + std::to_string(sent) +
                      ", shuffled " + std::to_string(c.shuffled) + ", grouped " +
                      std::to_string(c.grouped));
  }
  std::sort(groups.begin(), groups.end(), [&](const auto& a, const auto& b) {
    auto cmp = data::compare(a.first, b.first);
    return job.descending ? cmp > 0 : cmp < 0;
  });
  c.reduce_groups = groups.size();
  for (auto& g : groups) {
    for (auto& row : g.second) result.rows.push_back(std::move(row));
  }
  c.records_out = result.rows.size();
  c.wall = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
  return result;
}

JobResult run_map_only_job(const MapOnlyJob& job, const EngineOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  auto splits = plan_splits(job.inputs, options.split_bytes);
  MapperTask::Config cfg;
  std::vector<std::unique_ptr<MapperTask>> mappers;
  for (std::size_t i = 0; i < splits.size(); ++i) mappers.push_back(std::make_unique<MapperTask>(cfg, i));
  std::atomic<bool> stop{false};
  parallel_for(splits.size(), workers, stop, [&](std::size_t i) { mappers[i]->run(splits[i], stop); });

  JobResult result;
  result.counters.maps = splits.size();
  for (auto& m : mappers) {
    result.counters.records_in += m->records_in();
    for (auto& row : m->rows()) result.rows.push_back(std::move(row));
  }
  result.counters.map_emitted = result.rows.size();
  result.counters.records_out = result.rows.size();
  result.counters.wall =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
  return result;
}

}  // namespace flowlatin::engine
