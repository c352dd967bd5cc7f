#pragma once

// Built-in traffic analyses over the three capture sections. Each analysis
// has a direct in-memory form and a script form that runs through the
// parser, planner and engine; both produce identical reports.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowlatin/flow_model.hpp"
#include "flowlatin/jobs.hpp"

namespace flowlatin::analysis {

enum class Kind : std::uint8_t { SrcInterface, SrcIp, Protocol, PerNode };

/// "src-if", "src-ip", "protocol", "node".
std::string_view kind_name(Kind kind);
std::optional<Kind> parse_kind(std::string_view name);

struct ReportRow {
  std::string entity;
  double flow_per_sec = 0.0;
  std::int64_t record_count = 0;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Rows by flow_per_sec descending, ties by entity label in byte order.
struct TrafficReport {
  std::string name;
  std::int64_t duration_seconds = 1;
  std::vector<ReportRow> rows;
  friend bool operator==(const TrafficReport&, const TrafficReport&) = default;
};

void sort_rows(std::vector<ReportRow>& rows);

/// Throws AnalysisError unless the three sections carry the same record ids.
void check_sections(const flow::SectionTables& sections);

TrafficReport analyze_src_interface(const flow::SectionTables& sections);
TrafficReport analyze_src_ip(const flow::SectionTables& sections);
TrafficReport analyze_protocol(const flow::SectionTables& sections);
TrafficReport analyze_per_node(const flow::SectionTables& sections);
TrafficReport analyze(Kind kind, const flow::SectionTables& sections);

/// Script text of an analysis reading the section files in `section_dir`.
/// The per-node script stores two datasets, `<out>.src` and `<out>.dst`
/// (every record by source, and records with distinct endpoints by
/// destination), merged by the driver.
std::string analysis_script(Kind kind, const std::filesystem::path& section_dir,
                            const std::filesystem::path& out, std::int64_t duration_seconds);

/// Writes the sections under options.work_dir and runs the script form.
TrafficReport analyze_with_script(Kind kind, const flow::SectionTables& sections,
                                  const jobs::RunOptions& options);

/// The two-join pipeline joining all three sections per record:
/// (record_id, src_if, src_ip, dst_if, dst_ip, protocol, flow_per_sec).
std::string joined_sections_script(const std::filesystem::path& section_dir,
                                   const std::filesystem::path& out);

/// `#analysis,<name>,<duration>` then `entity\tflow_per_sec\trecord_count`.
std::string render_report(const TrafficReport& report);

}  // namespace flowlatin::analysis
