#pragma once

// NetFlow v5 flow records, the binary export codec, the normalized text
// capture format and the three analysis sections derived from a capture.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowlatin::flow {

struct Ipv4 {
  std::uint32_t value = 0;  // host byte order

  static constexpr Ipv4 from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c,
                                    std::uint8_t d) {
    return Ipv4{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) |
                std::uint32_t{d}};
  }
  /// Strict dotted-quad; no leading '+', no empty octets, each octet 0..255.
  static std::optional<Ipv4> parse(std::string_view text);
  std::string to_string() const;

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;
};

namespace proto {
inline constexpr std::uint8_t kIcmp = 1;
inline constexpr std::uint8_t kTcp = 6;
inline constexpr std::uint8_t kUdp = 17;
}  // namespace proto

/// One unidirectional flow. `first`/`last` are sysuptime milliseconds.
/// For ICMP, dst_port carries (type << 8) | code.
struct FlowRecord {
  Ipv4 src_ip;
  Ipv4 dst_ip;
  Ipv4 next_hop;
  std::uint16_t ingress_if = 0;
  std::uint16_t egress_if = 0;
  std::uint64_t packets = 0;
  std::uint64_t octets = 0;
  std::uint32_t first = 0;
  std::uint32_t last = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t tcp_flags = 0;
  std::uint8_t protocol = 0;
  std::uint8_t tos = 0;
  std::uint16_t src_as = 0;
  std::uint16_t dst_as = 0;
  // v5 wire fields outside the seven-tuple; zero for text captures.
  std::uint8_t src_mask = 0;
  std::uint8_t dst_mask = 0;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

inline constexpr std::size_t kV5HeaderBytes = 24;
inline constexpr std::size_t kV5RecordBytes = 48;
inline constexpr std::size_t kV5MaxRecords = 30;

struct V5Header {
  std::uint16_t version = 5;
  std::uint16_t count = 0;
  std::uint32_t sys_uptime = 0;
  std::uint32_t unix_secs = 0;
  std::uint32_t unix_nsecs = 0;
  std::uint32_t flow_sequence = 0;
  std::uint8_t engine_type = 0;
  std::uint8_t engine_id = 0;
  std::uint16_t sampling_interval = 0;

  friend bool operator==(const V5Header&, const V5Header&) = default;
};

struct V5Datagram {
  V5Header header;
  std::vector<FlowRecord> records;

  friend bool operator==(const V5Datagram&, const V5Datagram&) = default;
};

/// Decodes a complete export datagram (big-endian). Padding bytes are not
/// retained, so a datagram round-trips byte-exactly only when its pads are zero.
/// Throws UnsupportedVersion, TruncatedDatagram.
V5Datagram decode_v5(std::span<const std::uint8_t> bytes);

std::vector<FlowRecord> parse_v5_datagram(std::span<const std::uint8_t> bytes);

/// Inverse of decode_v5. header.count is taken from records.size().
/// Throws std::invalid_argument when a counter exceeds its 32-bit wire field
/// or there are more than 65535 records.
std::vector<std::uint8_t> serialize_v5(const V5Datagram& datagram);

/// A capture window plus its records. A record's id is its index.
struct CaptureSet {
  std::int64_t capture_start = 0;
  std::int64_t capture_end = 0;
  std::vector<FlowRecord> records;

  /// Window length in seconds, floored at 1.
  std::int64_t duration_seconds() const;

  friend bool operator==(const CaptureSet&, const CaptureSet&) = default;
};

/// Parses the normalized capture text:
///   #capture,<start_epoch_secs>,<end_epoch_secs>
///   <src_ip>,<dst_ip>,<next_hop>,<in_if>,<out_if>,<packets>,<octets>,
///   <first_ms>,<last_ms>,<src_port>,<dst_port>,<tcp_flags>,<proto>,<tos>,
///   <src_as>,<dst_as>
/// Blank lines are skipped. Throws ParseError (with 1-based line) or
/// InvalidTimestamps.
CaptureSet parse_capture_text(std::string_view text);

CaptureSet read_capture_file(const std::filesystem::path& path);

std::string render_capture_text(const CaptureSet& capture);

std::string protocol_name(std::uint8_t protocol);

struct ProtocolFlowRow {
  std::int64_t record_id = 0;
  std::string protocol;
  double flow_per_sec = 0.0;
  friend bool operator==(const ProtocolFlowRow&, const ProtocolFlowRow&) = default;
};

struct EndpointRow {
  std::int64_t record_id = 0;
  std::int64_t interface = 0;
  std::string ip;
  friend bool operator==(const EndpointRow&, const EndpointRow&) = default;
};

/// The protocol-flow, source and destination projections of one capture,
/// joinable on record_id. `duration_seconds` is the capture window (>= 1).
struct SectionTables {
  std::int64_t duration_seconds = 1;
  std::vector<ProtocolFlowRow> protocol_flow;
  std::vector<EndpointRow> source;
  std::vector<EndpointRow> destination;

  friend bool operator==(const SectionTables&, const SectionTables&) = default;
};

/// flow_per_sec of a row = (records sharing its protocol) / duration.
SectionTables sectionize(const CaptureSet& capture);

inline constexpr std::string_view kProtocolSectionFile = "NetFlow-Data1";
inline constexpr std::string_view kSourceSectionFile = "NetFlow-Data2";
inline constexpr std::string_view kDestinationSectionFile = "NetFlow-Data3";

/// Writes the three section files as tab-separated rows into `dir`.
/// Floats use the shortest round-trip representation.
void write_sections(const SectionTables& sections, const std::filesystem::path& dir);

}  // namespace flowlatin::flow
