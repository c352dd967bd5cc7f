#include "flowlatin/flow_model.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

#include "flowlatin/error.hpp"
#include "flowlatin/text.hpp"

namespace flowlatin::flow {

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
  auto parts = text::split(text, '.');
  if (parts.size() != 4) return std::nullopt;
  std::uint32_t value = 0;
  for (auto part : parts) {
    if (part.empty() || part.size() > 3) return std::nullopt;
    auto octet = text::parse_integer<unsigned>(part);
    if (!octet || *octet > 255) return std::nullopt;
    value = (value << 8) | *octet;
  }
  return Ipv4{value};
}

std::string Ipv4::to_string() const {
  return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
         std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
}

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return bytes_[pos_++]; }
  std::uint16_t u16() {
    std::uint16_t v = static_cast<std::uint16_t>((bytes_[pos_] << 8) | bytes_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = (std::uint32_t{bytes_[pos_]} << 24) | (std::uint32_t{bytes_[pos_ + 1]} << 16) |
                      (std::uint32_t{bytes_[pos_ + 2]} << 8) | std::uint32_t{bytes_[pos_ + 3]};
    pos_ += 4;
    return v;
  }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }
  std::vector<std::uint8_t> take() && { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  std::vector<std::uint8_t> out_;
};

std::uint32_t narrow_counter(std::uint64_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument(std::string(what) + " does not fit the 32-bit v5 field");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

V5Datagram decode_v5(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kV5HeaderBytes) throw TruncatedDatagram(bytes.size(), kV5HeaderBytes);
  Reader in(bytes);
  V5Datagram dg;
  auto& h = dg.header;
  h.version = in.u16();
  if (h.version != 5) throw UnsupportedVersion(h.version);
  h.count = in.u16();
  std::size_t expected = kV5HeaderBytes + std::size_t{h.count} * kV5RecordBytes;
  if (bytes.size() != expected) throw TruncatedDatagram(bytes.size(), expected);
  h.sys_uptime = in.u32();
  h.unix_secs = in.u32();
  h.unix_nsecs = in.u32();
  h.flow_sequence = in.u32();
  h.engine_type = in.u8();
  h.engine_id = in.u8();
  h.sampling_interval = in.u16();

  dg.records.reserve(h.count);
  for (std::size_t i = 0; i < h.count; ++i) {
    FlowRecord r;
    r.src_ip = Ipv4{in.u32()};
    r.dst_ip = Ipv4{in.u32()};
    r.next_hop = Ipv4{in.u32()};
    r.ingress_if = in.u16();
    r.egress_if = in.u16();
    r.packets = in.u32();
    r.octets = in.u32();
    r.first = in.u32();
    r.last = in.u32();
    r.src_port = in.u16();
    r.dst_port = in.u16();
    in.skip(1);  // pad1
    r.tcp_flags = in.u8();
    r.protocol = in.u8();
    r.tos = in.u8();
    r.src_as = in.u16();
    r.dst_as = in.u16();
    r.src_mask = in.u8();
    r.dst_mask = in.u8();
    in.skip(2);  // pad2
    dg.records.push_back(r);
  }
  return dg;
}

std::vector<FlowRecord> parse_v5_datagram(std::span<const std::uint8_t> bytes) {
  return decode_v5(bytes).records;
}

std::vector<std::uint8_t> serialize_v5(const V5Datagram& datagram) {
  if (datagram.records.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("too many records for one v5 datagram");
  }
  const auto& h = datagram.header;
  Writer out;
  out.reserve(kV5HeaderBytes + datagram.records.size() * kV5RecordBytes);
  out.u16(h.version);
  out.u16(static_cast<std::uint16_t>(datagram.records.size()));
  out.u32(h.sys_uptime);
  out.u32(h.unix_secs);
  out.u32(h.unix_nsecs);
  out.u32(h.flow_sequence);
  out.u8(h.engine_type);
  out.u8(h.engine_id);
  out.u16(h.sampling_interval);
  for (const auto& r : datagram.records) {
    out.u32(r.src_ip.value);
    out.u32(r.dst_ip.value);
    out.u32(r.next_hop.value);
    out.u16(r.ingress_if);
    out.u16(r.egress_if);
    out.u32(narrow_counter(r.packets, "packets"));
    out.u32(narrow_counter(r.octets, "octets"));
    out.u32(r.first);
    out.u32(r.last);
    out.u16(r.src_port);
    out.u16(r.dst_port);
    out.zeros(1);
    out.u8(r.tcp_flags);
    out.u8(r.protocol);
    out.u8(r.tos);
    out.u16(r.src_as);
    out.u16(r.dst_as);
    out.u8(r.src_mask);
    out.u8(r.dst_mask);
    out.zeros(2);
  }
  return std::move(out).take();
}

std::int64_t CaptureSet::duration_seconds() const {
  return std::max<std::int64_t>(1, capture_end - capture_start);
}

namespace {

constexpr std::size_t kRecordFields = 16;

template <typename T>
T field(std::string_view cell, std::size_t line, const char* name,
        std::uint64_t max = std::numeric_limits<T>::max()) {
  auto v = text::parse_integer<std::uint64_t>(cell);
  if (!v) throw ParseError(line, std::string("invalid ") + name + " '" + std::string(cell) + "'");
  if (*v > max) {
    throw ParseError(line, std::string(name) + " out of range '" + std::string(cell) + "'");
  }
  return static_cast<T>(*v);
}

Ipv4 address(std::string_view cell, std::size_t line, const char* name) {
  auto ip = Ipv4::parse(cell);
  if (!ip) throw ParseError(line, std::string("invalid ") + name + " '" + std::string(cell) + "'");
  return *ip;
}

FlowRecord parse_record_line(std::string_view body, std::size_t line) {
  auto cells = text::split(body, ',');
  if (cells.size() != kRecordFields) {
    throw ParseError(line, "expected " + std::to_string(kRecordFields) + " fields, got " +
                               std::to_string(cells.size()));
  }
  FlowRecord r;
  r.src_ip = address(cells[0], line, "src_ip");
  r.dst_ip = address(cells[1], line, "dst_ip");
  r.next_hop = address(cells[2], line, "next_hop");
  r.ingress_if = field<std::uint16_t>(cells[3], line, "in_if");
  r.egress_if = field<std::uint16_t>(cells[4], line, "out_if");
  r.packets = field<std::uint64_t>(cells[5], line, "packets");
  r.octets = field<std::uint64_t>(cells[6], line, "octets");
  r.first = field<std::uint32_t>(cells[7], line, "first_ms");
  r.last = field<std::uint32_t>(cells[8], line, "last_ms");
  r.src_port = field<std::uint16_t>(cells[9], line, "src_port");
  r.dst_port = field<std::uint16_t>(cells[10], line, "dst_port");
  r.tcp_flags = field<std::uint8_t>(cells[11], line, "tcp_flags");
  r.protocol = field<std::uint8_t>(cells[12], line, "proto");
  r.tos = field<std::uint8_t>(cells[13], line, "tos");
  r.src_as = field<std::uint16_t>(cells[14], line, "src_as");
  r.dst_as = field<std::uint16_t>(cells[15], line, "dst_as");
  if (r.protocol != proto::kTcp && r.protocol != proto::kUdp && r.src_port != 0) {
    throw ParseError(line, "src_port must be 0 for protocol " + std::to_string(r.protocol));
  }
  if (r.first > r.last) {
    throw InvalidTimestamps(line, "first_ms " + std::to_string(r.first) + " > last_ms " +
                                      std::to_string(r.last));
  }
  return r;
}

}  // namespace

CaptureSet parse_capture_text(std::string_view body) {
  auto rows = text::lines(body);
  if (rows.empty() || !rows.front().starts_with("#capture,")) {
    throw ParseError(1, "missing '#capture,<start>,<end>' header");
  }
  auto head = text::split(rows.front(), ',');
  if (head.size() != 3) throw ParseError(1, "capture header needs exactly start and end");
  auto start = text::parse_integer<std::int64_t>(head[1]);
  auto end = text::parse_integer<std::int64_t>(head[2]);
  if (!start || !end) throw ParseError(1, "invalid capture window");
  if (*end < *start) throw InvalidTimestamps(1, "capture end precedes capture start");

  CaptureSet capture{*start, *end, {}};
  capture.records.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    capture.records.push_back(parse_record_line(rows[i], i + 1));
  }
  return capture;
}

CaptureSet read_capture_file(const std::filesystem::path& path) {
  return parse_capture_text(text::read_file(path.string()));
}

std::string render_capture_text(const CaptureSet& capture) {
  std::string out = "#capture," + std::to_string(capture.capture_start) + ',' +
                    std::to_string(capture.capture_end) + '\n';
  for (const auto& r : capture.records) {
    out += r.src_ip.to_string() + ',' + r.dst_ip.to_string() + ',' + r.next_hop.to_string();
    for (std::uint64_t v : {std::uint64_t{r.ingress_if}, std::uint64_t{r.egress_if}, r.packets,
                            r.octets, std::uint64_t{r.first}, std::uint64_t{r.last},
                            std::uint64_t{r.src_port}, std::uint64_t{r.dst_port},
                            std::uint64_t{r.tcp_flags}, std::uint64_t{r.protocol},
                            std::uint64_t{r.tos}, std::uint64_t{r.src_as},
                            std::uint64_t{r.dst_as}}) {
      out += ',';
      out += std::to_string(v);
    }
    out += '\n';
  }
  return out;
}

std::string protocol_name(std::uint8_t protocol) {
  switch (protocol) {
    case proto::kTcp: return "TCP";
    case proto::kUdp: return "UDP";
    case proto::kIcmp: return "ICMP";
    default: return std::to_string(protocol);
  }
}

SectionTables sectionize(const CaptureSet& capture) {
  SectionTables out;
  out.duration_seconds = capture.duration_seconds();
  const double duration = static_cast<double>(out.duration_seconds);

  std::map<std::uint8_t, std::int64_t> per_protocol;
  for (const auto& r : capture.records) ++per_protocol[r.protocol];

  const auto n = capture.records.size();
  out.protocol_flow.reserve(n);
  out.source.reserve(n);
  out.destination.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = capture.records[i];
    const auto id = static_cast<std::int64_t>(i);
    out.protocol_flow.push_back(
        {id, protocol_name(r.protocol), static_cast<double>(per_protocol[r.protocol]) / duration});
    out.source.push_back({id, r.ingress_if, r.src_ip.to_string()});
    out.destination.push_back({id, r.egress_if, r.dst_ip.to_string()});
  }
  return out;
}

void write_sections(const SectionTables& sections, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string protocol;
  for (const auto& row : sections.protocol_flow) {
    protocol += std::to_string(row.record_id) + '\t' + row.protocol + '\t' +
                text::format_double_exact(row.flow_per_sec) + '\n';
  }
  auto endpoints = [](const std::vector<EndpointRow>& rows) {
    std::string out;
    for (const auto& row : rows) {
      out += std::to_string(row.record_id) + '\t' + std::to_string(row.interface) + '\t' + row.ip +
             '\n';
    }
    return out;
  };
  text::write_file((dir / kProtocolSectionFile).string(), protocol);
  text::write_file((dir / kSourceSectionFile).string(), endpoints(sections.source));
  text::write_file((dir / kDestinationSectionFile).string(), endpoints(sections.destination));
}

}  // namespace flowlatin::flow
