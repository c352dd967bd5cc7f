#include "flowlatin/analyses.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "flowlatin/error.hpp"
#include "flowlatin/text.hpp"

namespace flowlatin::analysis {

namespace fs = std::filesystem;
using flow::EndpointRow;
using flow::SectionTables;

namespace {

struct Tally {
  std::int64_t count = 0;
  double max_flow = 0.0;
};

/// Sum of `count` contributions of 1/duration each. A single rounding of
/// count * fl(1/duration), which is also what an exactly rounded SUM over
/// the per-record contributions yields.
double flow_of(std::int64_t count, std::int64_t duration) {
  const double contribution = 1.0 / static_cast<double>(duration);
  return static_cast<double>(count) * contribution;
}

TrafficReport finish(Kind kind, std::int64_t duration, const std::map<std::string, Tally>& tallies,
                     bool use_max) {
  TrafficReport report;
  report.name = std::string(kind_name(kind));
  report.duration_seconds = duration;
  for (const auto& [entity, t] : tallies) {
    report.rows.push_back({entity, use_max ? t.max_flow : flow_of(t.count, duration), t.count});
  }
  sort_rows(report.rows);
  return report;
}

/// Joins one endpoint section with the protocol section on record_id and
/// tallies per entity.
TrafficReport endpoint_report(Kind kind, const SectionTables& s,
                              std::string (*entity)(const EndpointRow&)) {
  check_sections(s);
  std::unordered_map<std::int64_t, std::int64_t> protocol_rows;
  for (const auto& p : s.protocol_flow) ++protocol_rows[p.record_id];
  std::map<std::string, Tally> tallies;
  for (const auto& row : s.source) {
    auto it = protocol_rows.find(row.record_id);
    if (it == protocol_rows.end()) continue;
    tallies[entity(row)].count += it->second;
  }
  return finish(kind, s.duration_seconds, tallies, false);
}

std::string quote(const fs::path& p) {
  std::string out = "'";
  for (char c : p.string()) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

std::string section_loads(const fs::path& dir, bool protocol, bool source, bool destination) {
  std::string out;
  if (protocol) {
    out += "Protocol = LOAD " + quote(dir / flow::kProtocolSectionFile) +
           " AS (record_id:int, protocol:chararray, flow_per_sec:float);\n";
  }
  if (source) {
    out += "Source = LOAD " + quote(dir / flow::kSourceSectionFile) +
           " AS (record_id:int, src_if:int, src_ip:chararray);\n";
  }
  if (destination) {
    out += "Destination = LOAD " + quote(dir / flow::kDestinationSectionFile) +
           " AS (record_id:int, dst_if:int, dst_ip:chararray);\n";
  }
  return out;
}

std::string entity_text(const data::Value& v) {
  if (v.kind() == data::ValueKind::CharArray) return v.as_text();
  return data::render_value(v);
}

}  // namespace

std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::SrcInterface: return "src-if";
    case Kind::SrcIp: return "src-ip";
    case Kind::Protocol: return "protocol";
    case Kind::PerNode: return "node";
  }
  return "?";
}

std::optional<Kind> parse_kind(std::string_view name) {
  for (Kind k : {Kind::SrcInterface, Kind::SrcIp, Kind::Protocol, Kind::PerNode}) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

void sort_rows(std::vector<ReportRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.flow_per_sec != b.flow_per_sec) return a.flow_per_sec > b.flow_per_sec;
    return a.entity < b.entity;
  });
}

void check_sections(const SectionTables& s) {
  auto ids = [](const auto& rows) {
    std::vector<std::int64_t> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.record_id);
    std::sort(out.begin(), out.end());
    return out;
  };
  auto p = ids(s.protocol_flow);
  if (p != ids(s.source) || p != ids(s.destination)) {
    throw AnalysisError("section tables disagree on record ids");
  }
  if (std::adjacent_find(p.begin(), p.end()) != p.end()) {
    throw AnalysisError("duplicate record id in sections");
  }
  if (s.duration_seconds < 1) throw AnalysisError("capture duration must be at least 1 second");
}

TrafficReport analyze_src_interface(const SectionTables& s) {
  return endpoint_report(Kind::SrcInterface, s,
                         [](const EndpointRow& r) { return std::to_string(r.interface); });
}

TrafficReport analyze_src_ip(const SectionTables& s) {
  return endpoint_report(Kind::SrcIp, s, [](const EndpointRow& r) { return r.ip; });
}

TrafficReport analyze_protocol(const SectionTables& s) {
  check_sections(s);
  std::map<std::string, Tally> tallies;
  for (const auto& p : s.protocol_flow) {
    auto& t = tallies[p.protocol];
    t.max_flow = t.count == 0 ? p.flow_per_sec : std::max(t.max_flow, p.flow_per_sec);
    ++t.count;
  }
  return finish(Kind::Protocol, s.duration_seconds, tallies, true);
}

TrafficReport analyze_per_node(const SectionTables& s) {
  check_sections(s);
  std::unordered_map<std::int64_t, const EndpointRow*> dst;
  for (const auto& d : s.destination) dst[d.record_id] = &d;
  std::map<std::string, Tally> tallies;
  for (const auto& src : s.source) {
    const auto& d = *dst.at(src.record_id);
    ++tallies[src.ip].count;
    if (d.ip != src.ip) ++tallies[d.ip].count;
  }
  return finish(Kind::PerNode, s.duration_seconds, tallies, false);
}

TrafficReport analyze(Kind kind, const SectionTables& s) {
  switch (kind) {
    case Kind::SrcInterface: return analyze_src_interface(s);
    case Kind::SrcIp: return analyze_src_ip(s);
    case Kind::Protocol: return analyze_protocol(s);
    case Kind::PerNode: return analyze_per_node(s);
  }
  throw AnalysisError("unknown analysis");
}

std::string analysis_script(Kind kind, const fs::path& dir, const fs::path& out,
                            std::int64_t duration) {
  const std::string contribution = "1.0 / " + std::to_string(duration);
  std::string s;
  switch (kind) {
    case Kind::SrcInterface:
    case Kind::SrcIp: {
      const char* key = kind == Kind::SrcInterface ? "src_if" : "src_ip";
      s += section_loads(dir, true, true, false);
      s += "Joined = JOIN Source BY record_id, Protocol BY record_id;\n";
      s += "Contrib = FOREACH Joined GENERATE " + std::string(key) + " AS entity, " + contribution +
           " AS contribution;\n";
      s += "Buckets = GROUP Contrib BY entity;\n";
      s += "Report = FOREACH Buckets GENERATE group AS entity, SUM(Contrib.contribution) AS flow, "
           "COUNT(Contrib) AS records;\n";
      s += "STORE Report INTO " + quote(out) + ";\n";
      break;
    }
    case Kind::Protocol:
      s += section_loads(dir, true, false, false);
      s += "Buckets = GROUP Protocol BY protocol;\n";
      s += "Report = FOREACH Buckets GENERATE group AS entity, MAX(Protocol.flow_per_sec) AS flow, "
           "COUNT(Protocol) AS records;\n";
      s += "STORE Report INTO " + quote(out) + ";\n";
      break;
    case Kind::PerNode: {
      fs::path src_out = out;
      src_out += ".src";
      fs::path dst_out = out;
      dst_out += ".dst";
      s += section_loads(dir, false, true, true);
      s += "Ends = JOIN Source BY record_id, Destination BY record_id;\n";
      s += "AsSource = FOREACH Ends GENERATE src_ip AS node;\n";
      s += "BySource = GROUP AsSource BY node;\n";
      s += "SourceCounts = FOREACH BySource GENERATE group AS node, COUNT(AsSource) AS records;\n";
      s += "STORE SourceCounts INTO " + quote(src_out) + ";\n";
      s += "Crossing = FILTER Ends BY src_ip != dst_ip;\n";
      s += "AsDestination = FOREACH Crossing GENERATE dst_ip AS node;\n";
      s += "ByDestination = GROUP AsDestination BY node;\n";
      s += "DestinationCounts = FOREACH ByDestination GENERATE group AS node, "
           "COUNT(AsDestination) AS records;\n";
      s += "STORE DestinationCounts INTO " + quote(dst_out) + ";\n";
      break;
    }
  }
  return s;
}

std::string joined_sections_script(const fs::path& dir, const fs::path& out) {
  std::string s = section_loads(dir, true, true, true);
  s += "SrcProto = JOIN Source BY record_id, Protocol BY record_id;\n";
  s += "Flows = JOIN SrcProto BY Source::record_id, Destination BY record_id;\n";
  s += "Pairs = FOREACH Flows GENERATE Source::record_id AS record_id, src_if, src_ip, dst_if, "
       "dst_ip, protocol, flow_per_sec;\n";
  s += "STORE Pairs INTO " + quote(out) + ";\n";
  return s;
}

TrafficReport analyze_with_script(Kind kind, const SectionTables& sections,
                                  const jobs::RunOptions& options) {
  check_sections(sections);
  const fs::path dir = options.work_dir / "sections";
  flow::write_sections(sections, dir);
  const fs::path out = options.work_dir / ("report-" + std::string(kind_name(kind)));

  jobs::RunOptions run = options;
  run.write_stores = false;
  auto result = jobs::execute_script(analysis_script(kind, dir, out, sections.duration_seconds), run);

  TrafficReport report;
  report.name = std::string(kind_name(kind));
  report.duration_seconds = sections.duration_seconds;
  if (kind == Kind::PerNode) {
    std::map<std::string, std::int64_t> counts;
    for (const char* suffix : {".src", ".dst"}) {
      fs::path p = out;
      p += suffix;
      for (const auto& row : result.stored.at(p.string())) counts[row.at(0).as_text()] += row.at(1).as_int();
    }
    for (const auto& [node, n] : counts) {
      report.rows.push_back({node, flow_of(n, sections.duration_seconds), n});
    }
  } else {
    for (const auto& row : result.stored.at(out.string())) {
      report.rows.push_back({entity_text(row.at(0)), row.at(1).as_float(), row.at(2).as_int()});
    }
  }
  sort_rows(report.rows);
  return report;
}

std::string render_report(const TrafficReport& report) {
  std::string out = "#analysis," + report.name + "," + std::to_string(report.duration_seconds) + "\n";
  for (const auto& r : report.rows) {
    out += r.entity + "\t" + text::format_double_exact(r.flow_per_sec) + "\t" +
           std::to_string(r.record_count) + "\n";
  }
  return out;
}

}  // namespace flowlatin::analysis
