#include "generators.hpp"

#include <cmath>
#include <limits>

#include "flowlatin/error.hpp"
#include "flowlatin/schema.hpp"
#include "flowlatin/script.hpp"
#include "flowlatin/text.hpp"

namespace flowlatin::testing {

namespace fs = std::filesystem;
using data::Tuple;
using data::TypeKind;
using data::Value;

data::Value random_value(Rng& rng, int depth) {
  int kind = static_cast<int>(rng() % (depth > 0 ? 5 : 3));
  switch (kind) {
    case 0:
      if (rng() % 4 == 0) return static_cast<std::int64_t>(rng());
      return static_cast<std::int64_t>(uniform(rng, 0, 6)) - 3;
    case 1: {
      static const double specials[] = {-0.0,
                                        0.0,
                                        1.5,
                                        2.0,
                                        -3.0,
                                        std::numeric_limits<double>::infinity(),
                                        -std::numeric_limits<double>::infinity(),
                                        std::numeric_limits<double>::quiet_NaN(),
                                        9007199254740993.0};
      if (rng() % 3 == 0) return static_cast<double>(static_cast<std::int64_t>(rng() % 64) - 32) / 8.0;
      return specials[rng() % std::size(specials)];
    }
    case 2: {
      static const char* words[] = {"", "a", "b", "ab", "\xff", "a\tb"};
      return std::string(words[rng() % std::size(words)]);
    }
    case 3: {
      Tuple t;
      for (auto n = rng() % 4; n > 0; --n) t.push_back(random_value(rng, depth - 1));
      return t;
    }
    default: {
      data::Bag b;
      for (auto n = rng() % 4; n > 0; --n) {
        Tuple t;
        for (auto m = rng() % 3; m > 0; --m) t.push_back(random_value(rng, depth - 1));
        b.tuples.push_back(std::move(t));
      }
      return b;
    }
  }
}

flow::CaptureSet random_capture(Rng& rng, std::size_t records) {
  static const std::uint8_t protocols[] = {6, 6, 6, 17, 17, 1, 47, 50};
  flow::CaptureSet c;
  c.capture_start = 1600000000 + static_cast<std::int64_t>(rng() % 1000000);
  c.capture_end = c.capture_start + static_cast<std::int64_t>(rng() % 3601);
  auto address = [&] {
    auto i = static_cast<std::uint8_t>(rng() % 12);
    return i < 6 ? flow::Ipv4::from_octets(10, 0, 0, static_cast<std::uint8_t>(i + 1))
                 : flow::Ipv4::from_octets(192, 168, 1, static_cast<std::uint8_t>(i * 10));
  };
  for (std::size_t i = 0; i < records; ++i) {
    flow::FlowRecord r;
    r.src_ip = address();
    r.dst_ip = rng() % 10 == 0 ? r.src_ip : address();
    r.next_hop = flow::Ipv4::from_octets(10, 0, 0, 254);
    r.ingress_if = static_cast<std::uint16_t>(rng() % 12);
    r.egress_if = static_cast<std::uint16_t>(rng() % 12);
    r.packets = 1 + rng() % 100000;
    r.octets = r.packets * (40 + rng() % 1460);
    r.first = static_cast<std::uint32_t>(rng() % 1000000);
    r.last = r.first + static_cast<std::uint32_t>(rng() % 60000);
    r.protocol = protocols[rng() % std::size(protocols)];
    if (r.protocol == flow::proto::kTcp || r.protocol == flow::proto::kUdp) {
      r.src_port = static_cast<std::uint16_t>(rng());
      r.dst_port = static_cast<std::uint16_t>(rng());
    } else if (r.protocol == flow::proto::kIcmp) {
      r.dst_port = static_cast<std::uint16_t>((rng() % 16) << 8 | rng() % 4);
    }
    r.tcp_flags = r.protocol == flow::proto::kTcp ? static_cast<std::uint8_t>(rng()) : 0;
    r.tos = static_cast<std::uint8_t>(rng() % 4 * 8);
    r.src_as = static_cast<std::uint16_t>(rng() % 70000);
    r.dst_as = static_cast<std::uint16_t>(rng() % 70000);
    c.records.push_back(r);
  }
  return c;
}

flow::V5Datagram random_datagram(Rng& rng) {
  flow::V5Datagram d;
  auto u32 = [&] { return static_cast<std::uint32_t>(rng()); };
  auto u16 = [&] { return static_cast<std::uint16_t>(rng()); };
  auto u8 = [&] { return static_cast<std::uint8_t>(rng()); };
  d.header.sys_uptime = u32();
  d.header.unix_secs = u32();
  d.header.unix_nsecs = u32();
  d.header.flow_sequence = u32();
  d.header.engine_type = u8();
  d.header.engine_id = u8();
  d.header.sampling_interval = u16();
  const auto n = uniform(rng, 1, flow::kV5MaxRecords);
  for (std::uint64_t i = 0; i < n; ++i) {
    flow::FlowRecord r;
    r.src_ip = {u32()};
    r.dst_ip = {u32()};
    r.next_hop = {u32()};
    r.ingress_if = u16();
    r.egress_if = u16();
    r.packets = u32();
    r.octets = u32();
    r.first = u32();
    r.last = u32();
    r.src_port = u16();
    r.dst_port = u16();
    r.tcp_flags = u8();
    r.protocol = u8();
    r.tos = u8();
    r.src_as = u16();
    r.dst_as = u16();
    r.src_mask = u8();
    r.dst_mask = u8();
    d.records.push_back(r);
  }
  d.header.count = static_cast<std::uint16_t>(n);
  return d;
}

namespace {

const char* kWords[] = {"a", "b", "c", "dd", "e f"};

std::string float_literal(std::int64_t quarters) {
  std::string s = text::format_double_exact(static_cast<double>(quarters) / 4.0);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

class PlanBuilder {
 public:
  PlanBuilder(Rng& rng, const fs::path& dir, const PlanShape& shape)
      : rng_(rng), dir_(dir), shape_(shape) {}

  PlanCase build() {
    out_.source_schemas["a"] = data::parse_schema("k:int, c:chararray, x:float, n:int");
    out_.source_schemas["b"] = data::parse_schema("k:int, d:chararray, y:float");
    make_rows();
    cur_ = load("a");
    const auto k = uniform(rng_, shape_.min_shuffles, shape_.max_shuffles);
    while (out_.shuffles < k) {
      for (auto i = rng_() % 3; i > 0; --i) narrow();
      shuffle();
    }
    for (auto i = rng_() % 3; i > 0; --i) narrow();
    emit("STORE " + cur_ + " INTO '" + (dir_ / "out0").string() + "';\n");
    if (shape_.extra_stores && rng_() % 3 == 0) {
      std::vector<std::string> candidates;
      for (const auto& a : derived_) {
        if (a != cur_) candidates.push_back(a);
      }
      if (!candidates.empty()) {
        emit("STORE " + candidates[rng_() % candidates.size()] + " INTO '" +
             (dir_ / "out1").string() + "';\n");
        out_.single_store = false;
      }
    }
    out_.script = script_;
    return out_;
  }

 private:
  void make_rows() {
    auto& a = out_.sources[(dir_ / "a.txt").string()];
    for (auto n = uniform(rng_, 0, shape_.max_rows); n > 0; --n) {
      a.push_back(Tuple{Value(static_cast<std::int64_t>(rng_() % 20)),
                        Value(kWords[rng_() % std::size(kWords)]),
                        Value(static_cast<double>(static_cast<std::int64_t>(rng_() % 801) - 400) / 4.0),
                        Value(static_cast<std::int64_t>(rng_() % 101) - 50)});
    }
    auto& b = out_.sources[(dir_ / "b.txt").string()];
    for (auto n = uniform(rng_, 0, 40); n > 0; --n) {
      b.push_back(Tuple{Value(static_cast<std::int64_t>(rng_() % 20)),
                        Value(kWords[rng_() % std::size(kWords)]),
                        Value(static_cast<double>(static_cast<std::int64_t>(rng_() % 81) - 40) / 4.0)});
    }
  }

  std::string fresh(const char* prefix) { return prefix + std::to_string(next_++); }

  std::string load(const std::string& table) {
    auto alias = fresh(table == "a" ? "A" : "B");
    emit(alias + " = LOAD '" + (dir_ / (table + ".txt")).string() + "' AS (" +
         out_.source_schemas[table].to_string() + ");\n");
    return alias;
  }

  void emit(const std::string& stmt) { script_ += stmt; }

  // Appends `stmts` when the script still parses and type-checks.
  bool attempt(const std::string& stmts) {
    try {
      script::infer_schemas(script::parse_script(script_ + stmts));
    } catch (const Error&) {
      return false;
    }
    script_ += stmts;
    return true;
  }

  data::Schema schema(const std::string& alias) const {
    auto plan = script::infer_schemas(script::parse_script(script_));
    return *plan.at(alias).schema;
  }

  std::vector<std::string> fields(const data::Schema& s, std::initializer_list<TypeKind> kinds) {
    std::vector<std::string> out;
    for (const auto& f : s.fields) {
      for (auto k : kinds) {
        if (f.type.kind == k) out.push_back(f.name);
      }
    }
    return out;
  }

  template <typename T>
  const T& pick(const std::vector<T>& xs) {
    return xs[rng_() % xs.size()];
  }

  std::string comparison(const data::Schema& s) {
    static const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
    auto names = fields(s, {TypeKind::Int, TypeKind::Float, TypeKind::CharArray});
    if (names.empty()) return {};
    const auto& name = pick(names);
    const auto& type = s.fields[*s.index_of(name)].type;
    std::string op = ops[rng_() % std::size(ops)];
    switch (type.kind) {
      case TypeKind::Int: return name + " " + op + " " + std::to_string(static_cast<std::int64_t>(rng_() % 26) - 5);
      case TypeKind::Float: return name + " " + op + " " + float_literal(static_cast<std::int64_t>(rng_() % 161) - 80);
      default: return name + (rng_() % 2 ? " == '" : " != '") + kWords[rng_() % std::size(kWords)] + "'";
    }
  }

  void commit(const std::string& alias, const std::string& stmts) {
    if (attempt(stmts)) {
      cur_ = alias;
      derived_.push_back(alias);
    }
  }

  void narrow() {
    auto s = schema(cur_);
    if (rng_() % 2 == 0) {
      auto pred = comparison(s);
      if (pred.empty()) return;
      if (rng_() % 3 == 0) {
        auto other = comparison(s);
        pred = "(" + pred + (rng_() % 2 ? ") AND (" : ") OR (") + other + ")";
      }
      auto alias = fresh("F");
      commit(alias, alias + " = FILTER " + cur_ + " BY " + pred + ";\n");
      return;
    }
    std::vector<std::string> items;
    for (const auto& f : s.fields) {
      if (f.type.kind == TypeKind::Bag) {
        if (rng_() % 2 == 0) items.push_back("FLATTEN(" + f.name + ")");
      } else if (rng_() % 3 != 0) {
        items.push_back(f.name + " AS " + fresh("f"));
      }
    }
    auto ints = fields(s, {TypeKind::Int});
    auto floats = fields(s, {TypeKind::Float});
    if (!ints.empty() && rng_() % 2 == 0) {
      items.push_back(pick(ints) + " * 3 - " + pick(ints) + " AS " + fresh("f"));
    }
    if (!floats.empty() && rng_() % 2 == 0) {
      items.push_back(pick(floats) + " / 2.0 + 1 AS " + fresh("f"));
    }
    if (items.empty()) return;
    std::string list;
    for (const auto& i : items) list += (list.empty() ? "" : ", ") + i;
    auto alias = fresh("P");
    commit(alias, alias + " = FOREACH " + cur_ + " GENERATE " + list + ";\n");
  }

  void shuffle() {
    for (int tries = 0; tries < 8; ++tries) {
      auto before = cur_;
      switch (rng_() % 4) {
        case 0:
        case 1: group(); break;
        case 2: join(); break;
        default: order(); break;
      }
      if (cur_ != before) {
        ++out_.shuffles;
        return;
      }
    }
    // A relation made only of bags has nothing to key on; start over from a
    // load. The abandoned chain is dead code and compiles to nothing.
    cur_ = load("a");
    out_.shuffles = 0;
  }

  void group() {
    auto s = schema(cur_);
    auto keys = fields(s, {TypeKind::Int, TypeKind::CharArray, TypeKind::Float, TypeKind::Tuple});
    if (keys.empty()) return;
    std::string by = pick(keys);
    if (keys.size() > 1 && rng_() % 3 == 0) {
      auto second = pick(keys);
      if (second != by) by = "(" + by + ", " + second + ")";
    }
    auto g = fresh("G");
    std::string stmts = g + " = GROUP " + cur_ + " BY " + by + ";\n";
    auto mode = rng_() % 10;
    if (mode == 0) {
      commit(g, stmts);
      return;
    }
    auto r = fresh("R");
    if (mode == 1) {
      commit(r, stmts + r + " = FOREACH " + g + " GENERATE group AS " + fresh("f") + ", FLATTEN(" +
                    cur_ + ");\n");
      return;
    }
    std::string list = rng_() % 2 ? "group" : "group AS " + fresh("f");
    list += ", COUNT(" + cur_ + ") AS " + fresh("f");
    auto numeric = fields(s, {TypeKind::Int, TypeKind::Float});
    auto scalar = fields(s, {TypeKind::Int, TypeKind::Float, TypeKind::CharArray});
    static const char* fns[] = {"SUM", "AVG", "MIN", "MAX"};
    for (auto i = rng_() % 4; i > 0; --i) {
      std::string fn = fns[rng_() % std::size(fns)];
      const auto& pool = (fn == "SUM" || fn == "AVG") ? numeric : scalar;
      if (pool.empty()) continue;
      list += ", " + fn + "(" + cur_ + "." + pick(pool) + ") AS " + fresh("f");
    }
    commit(r, stmts + r + " = FOREACH " + g + " GENERATE " + list + ";\n");
  }

  void join() {
    auto s = schema(cur_);
    auto ints = fields(s, {TypeKind::Int});
    auto texts = fields(s, {TypeKind::CharArray});
    std::string right = load("b");
    std::string right_stmts;
    if (rng_() % 3 == 0) {
      auto f = fresh("F");
      right_stmts = f + " = FILTER " + right + " BY y > " + float_literal(static_cast<std::int64_t>(rng_() % 41) - 30) + ";\n";
      right = f;
    }
    std::string lk, rk;
    if (!ints.empty() && (texts.empty() || rng_() % 4 != 0)) {
      lk = pick(ints);
      rk = "k";
      if (!texts.empty() && rng_() % 4 == 0) {
        lk = "(" + lk + ", " + pick(texts) + ")";
        rk = "(k, d)";
      }
    } else if (!texts.empty()) {
      lk = pick(texts);
      rk = "d";
    } else {
      return;
    }
    auto j = fresh("J");
    commit(j, right_stmts + j + " = JOIN " + cur_ + " BY " + lk + ", " + right + " BY " + rk + ";\n");
  }

  void order() {
    auto s = schema(cur_);
    auto keys = fields(s, {TypeKind::Int, TypeKind::CharArray, TypeKind::Float, TypeKind::Tuple});
    if (keys.empty()) return;
    std::string by = pick(keys);
    if (keys.size() > 1 && rng_() % 2 == 0) {
      auto second = pick(keys);
      if (second != by) by = "(" + by + ", " + second + ")";
    }
    auto o = fresh("O");
    commit(o, o + " = ORDER " + cur_ + " BY " + by + (rng_() % 2 ? " DESC" : "") + ";\n");
  }

  Rng& rng_;
  fs::path dir_;
  PlanShape shape_;
  PlanCase out_;
  std::string script_;
  std::string cur_;
  std::vector<std::string> derived_;
  int next_ = 0;
};

}  // namespace

PlanCase random_plan(Rng& rng, const fs::path& dir, const PlanShape& shape) {
  return PlanBuilder(rng, dir, shape).build();
}

void write_sources(const PlanCase& c) {
  for (const auto& [path, rows] : c.sources) {
    std::string body;
    for (const auto& r : rows) body += data::render_row(r) + "\n";
    text::write_file(path, body);
  }
}

}  // namespace flowlatin::testing
