#include <gtest/gtest.h>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "flowlatin/error.hpp"
#include "flowlatin/flow_model.hpp"
#include "flowlatin/text.hpp"
#include "generators.hpp"
#include "temp_dir.hpp"

namespace fl = flowlatin::flow;
using flowlatin::testing::Rng;

namespace {

struct Bytes {
  std::vector<std::uint8_t> b;
  void u8(std::uint32_t v) { b.push_back(static_cast<std::uint8_t>(v)); }
  void u16(std::uint32_t v) { u8(v >> 8); u8(v); }
  void u32(std::uint32_t v) { u16(v >> 16); u16(v & 0xffff); }
};

void header(Bytes& out, std::uint16_t version, std::uint16_t count) {
  out.u16(version);
  out.u16(count);
  out.u32(360000);      // sys_uptime
  out.u32(1700000000);  // unix_secs
  out.u32(500);         // unix_nsecs
  out.u32(42);          // flow_sequence
  out.u8(1);            // engine_type
  out.u8(2);            // engine_id
  out.u16(0);           // sampling
}

// One record laid out field by field in wire order.
void record(Bytes& out, std::uint32_t src, std::uint32_t dst, std::uint8_t proto,
            std::uint16_t sport, std::uint16_t dport) {
  out.u32(src);
  out.u32(dst);
  out.u32(0x0a0000fe);  // next hop 10.0.0.254
  out.u16(3);           // input if
  out.u16(7);           // output if
  out.u32(12);          // packets
  out.u32(3400);        // octets
  out.u32(1000);        // first
  out.u32(2500);        // last
  out.u16(sport);
  out.u16(dport);
  out.u8(0);  // pad
  out.u8(0x12);  // tcp flags
  out.u8(proto);
  out.u8(8);  // tos
  out.u16(65001);
  out.u16(65002);
  out.u8(24);
  out.u8(16);
  out.u16(0);  // pad
}

std::string capture_line(const std::string& proto, const std::string& sport = "0") {
  return "10.0.0.1,10.0.0.2,10.0.0.254,1,2,10,4000,100,200," + sport + ",80,0," + proto + ",0,1,2";
}

}  // namespace

TEST(V5Decode, EmptyDatagramHasNoRecords) {
  Bytes b;
  header(b, 5, 0);
  EXPECT_TRUE(fl::parse_v5_datagram(b.b).empty());
}

TEST(V5Decode, RejectsOtherVersions) {
  Bytes b;
  header(b, 9, 0);
  try {
    fl::parse_v5_datagram(b.b);
    FAIL() << "version 9 accepted";
  } catch (const flowlatin::UnsupportedVersion& e) {
    EXPECT_EQ(e.version(), 9u);
  }
}

TEST(V5Decode, RejectsShortHeader) {
  std::vector<std::uint8_t> b(23, 0);
  b[1] = 5;
  EXPECT_THROW(fl::parse_v5_datagram(b), flowlatin::TruncatedDatagram);
}

TEST(V5Decode, RejectsLengthNotMatchingCount) {
  Bytes b;
  header(b, 5, 2);
  record(b, 0x0a000001, 0x0a000002, 6, 80, 1234);
  try {
    fl::parse_v5_datagram(b.b);
    FAIL() << "missing record accepted";
  } catch (const flowlatin::TruncatedDatagram& e) {
    EXPECT_EQ(e.actual(), 24u + 48u);
    EXPECT_EQ(e.expected(), 24u + 96u);
  }
  // Trailing bytes beyond the declared count are an error too.
  Bytes c;
  header(c, 5, 1);
  record(c, 1, 2, 6, 1, 2);
  c.u8(0);
  EXPECT_THROW(fl::parse_v5_datagram(c.b), flowlatin::TruncatedDatagram);
}

TEST(V5Decode, HandAssembledRecordsDecodeFieldByField) {
  Bytes b;
  header(b, 5, 2);
  record(b, 0x0a000001, 0x0a000002, 6, 80, 1234);
  record(b, 0xc0a80105, 0x08080808, 1, 0, 0x0800);
  auto d = fl::decode_v5(b.b);
  EXPECT_EQ(d.header.count, 2);
  EXPECT_EQ(d.header.sys_uptime, 360000u);
  EXPECT_EQ(d.header.unix_secs, 1700000000u);
  EXPECT_EQ(d.header.flow_sequence, 42u);
  EXPECT_EQ(d.header.engine_id, 2);
  ASSERT_EQ(d.records.size(), 2u);

  const auto& r = d.records[0];
  EXPECT_EQ(r.src_ip.to_string(), "10.0.0.1");
  EXPECT_EQ(r.dst_ip.to_string(), "10.0.0.2");
  EXPECT_EQ(r.next_hop.to_string(), "10.0.0.254");
  EXPECT_EQ(r.ingress_if, 3);
  EXPECT_EQ(r.egress_if, 7);
  EXPECT_EQ(r.packets, 12u);
  EXPECT_EQ(r.octets, 3400u);
  EXPECT_EQ(r.first, 1000u);
  EXPECT_EQ(r.last, 2500u);
  EXPECT_EQ(r.src_port, 80);
  EXPECT_EQ(r.dst_port, 1234);
  EXPECT_EQ(r.tcp_flags, 0x12);
  EXPECT_EQ(r.protocol, fl::proto::kTcp);
  EXPECT_EQ(r.tos, 8);
  EXPECT_EQ(r.src_as, 65001);
  EXPECT_EQ(r.dst_as, 65002);
  EXPECT_EQ(r.src_mask, 24);
  EXPECT_EQ(r.dst_mask, 16);

  const auto& icmp = d.records[1];
  EXPECT_EQ(icmp.src_ip.to_string(), "192.168.1.5");
  EXPECT_EQ(icmp.protocol, fl::proto::kIcmp);
  EXPECT_EQ(icmp.dst_port >> 8, 8);  // echo request type
  EXPECT_EQ(icmp.dst_port & 0xff, 0);

  EXPECT_EQ(fl::serialize_v5(d), b.b);
}

TEST(V5RoundTrip, RandomDatagramsAreByteExact) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    auto d = flowlatin::testing::random_datagram(rng);
    auto bytes = fl::serialize_v5(d);
    ASSERT_EQ(bytes.size(), fl::kV5HeaderBytes + d.records.size() * fl::kV5RecordBytes);
    auto back = fl::decode_v5(bytes);
    ASSERT_EQ(back, d);
    ASSERT_EQ(fl::serialize_v5(back), bytes);
  }
}

TEST(V5Serialize, RejectsCountersWiderThanTheWire) {
  fl::V5Datagram d;
  d.records.resize(1);
  d.records[0].packets = std::uint64_t{1} << 32;
  EXPECT_THROW(fl::serialize_v5(d), std::invalid_argument);
}

TEST(Ipv4, StrictDottedQuad) {
  EXPECT_EQ(fl::Ipv4::parse("192.168.0.1")->value, 0xc0a80001u);
  for (const char* bad : {"", "1.2.3", "1.2.3.4.5", "256.1.1.1", "1..2.3", "+1.2.3.4", "a.b.c.d",
                          "1.2.3.4 ", "0001.2.3.4"}) {
    EXPECT_FALSE(fl::Ipv4::parse(bad)) << bad;
  }
}

TEST(CaptureText, HeaderOnly) {
  auto c = fl::parse_capture_text("#capture,10,20\n");
  EXPECT_EQ(c.capture_start, 10);
  EXPECT_EQ(c.capture_end, 20);
  EXPECT_TRUE(c.records.empty());
  EXPECT_EQ(c.duration_seconds(), 10);
  EXPECT_EQ(fl::parse_capture_text("#capture,5,5\n").duration_seconds(), 1);
}

TEST(CaptureText, SampleFixtureFields) {
  auto c = fl::read_capture_file(std::string(FLOWLATIN_FIXTURE_DIR) + "/sample.cap");
  ASSERT_EQ(c.records.size(), 3u);
  EXPECT_EQ(c.duration_seconds(), 2);
  EXPECT_EQ(c.records[0].protocol, fl::proto::kTcp);
  EXPECT_EQ(c.records[1].protocol, fl::proto::kTcp);
  EXPECT_EQ(c.records[2].protocol, fl::proto::kUdp);
  const auto& r = c.records[1];
  EXPECT_EQ(r.src_ip.to_string(), "10.0.0.1");
  EXPECT_EQ(r.dst_ip.to_string(), "10.0.0.3");
  EXPECT_EQ(r.ingress_if, 1);
  EXPECT_EQ(r.egress_if, 4);
  EXPECT_EQ(r.packets, 5u);
  EXPECT_EQ(r.octets, 2000u);
  EXPECT_EQ(r.first, 1100u);
  EXPECT_EQ(r.last, 1900u);
  EXPECT_EQ(r.src_port, 1235);
  EXPECT_EQ(r.dst_port, 443);
  EXPECT_EQ(r.tcp_flags, 16);
  EXPECT_EQ(r.src_as, 65001);
  EXPECT_EQ(r.dst_as, 65003);
}

TEST(CaptureText, PortOutOfRangeNamesTheLine) {
  std::string text = "#capture,0,1\n" + capture_line("6", "1") + "\n" + capture_line("6", "70000") + "\n";
  try {
    fl::parse_capture_text(text);
    FAIL() << "port 70000 accepted";
  } catch (const flowlatin::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(CaptureText, TimestampOrder) {
  EXPECT_THROW(fl::parse_capture_text("#capture,0,1\n10.0.0.1,10.0.0.2,0.0.0.0,1,2,1,1,200,100,1,2,0,6,0,0,0\n"),
               flowlatin::InvalidTimestamps);
  EXPECT_THROW(fl::parse_capture_text("#capture,9,1\n"), flowlatin::InvalidTimestamps);
}

TEST(CaptureText, NonTransportProtocolsCarryNoSourcePort) {
  EXPECT_NO_THROW(fl::parse_capture_text("#capture,0,1\n" + capture_line("1") + "\n"));
  EXPECT_THROW(fl::parse_capture_text("#capture,0,1\n" + capture_line("1", "5") + "\n"),
               flowlatin::ParseError);
}

TEST(CaptureText, MissingHeader) {
  EXPECT_THROW(fl::parse_capture_text(capture_line("6") + "\n"), flowlatin::ParseError);
  EXPECT_THROW(fl::parse_capture_text(""), flowlatin::ParseError);
}

TEST(CaptureText, RenderParseRoundTrip) {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    auto c = flowlatin::testing::random_capture(rng, rng() % 40);
    ASSERT_EQ(fl::parse_capture_text(fl::render_capture_text(c)), c);
  }
}

// Valid lines never raise; a corrupted cell always raises ParseError and
// yields no record.
TEST(CaptureText, FuzzedLines) {
  Rng rng(99);
  const char* garbage[] = {"", "x", "-1", "1.5", "999999999999999999999999", " 1", "0x10", "1e3"};
  for (int i = 0; i < 500; ++i) {
    auto c = flowlatin::testing::random_capture(rng, 1 + rng() % 5);
    std::string text = fl::render_capture_text(c);
    ASSERT_NO_THROW(fl::parse_capture_text(text));

    auto lines = flowlatin::text::lines(text);
    std::size_t victim = 1 + rng() % (lines.size() - 1);
    auto cells = flowlatin::text::split(lines[victim], ',');
    std::string bad;
    switch (rng() % 3) {
      case 0: {
        // Every garbage string is invalid both as an address and as a counter.
        std::size_t col = rng() % cells.size();
        std::string g = garbage[rng() % std::size(garbage)];
        for (std::size_t k = 0; k < cells.size(); ++k) {
          bad += (k ? "," : "") + (k == col ? g : std::string(cells[k]));
        }
        break;
      }
      case 1: bad = std::string(lines[victim]) + ",7"; break;
      default: bad = std::string(lines[victim].substr(0, lines[victim].rfind(','))); break;
    }
    std::string corrupted;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      corrupted += (k == victim ? bad : std::string(lines[k])) + "\n";
    }
    try {
      fl::parse_capture_text(corrupted);
      FAIL() << "accepted corrupted line: " << bad;
    } catch (const flowlatin::ParseError& e) {
      EXPECT_EQ(e.line(), victim + 1) << bad;
    }
  }
}

TEST(Sectionize, EmptyCapture) {
  auto s = fl::sectionize(fl::parse_capture_text("#capture,0,0\n"));
  EXPECT_TRUE(s.protocol_flow.empty());
  EXPECT_TRUE(s.source.empty());
  EXPECT_TRUE(s.destination.empty());
}

TEST(Sectionize, FlowPerSecondIsProtocolShareOverDuration) {
  auto s = fl::sectionize(fl::read_capture_file(std::string(FLOWLATIN_FIXTURE_DIR) + "/sample.cap"));
  ASSERT_EQ(s.protocol_flow.size(), 3u);
  EXPECT_EQ(s.duration_seconds, 2);
  EXPECT_EQ(s.protocol_flow[0], (fl::ProtocolFlowRow{0, "TCP", 1.0}));
  EXPECT_EQ(s.protocol_flow[1], (fl::ProtocolFlowRow{1, "TCP", 1.0}));
  EXPECT_EQ(s.protocol_flow[2], (fl::ProtocolFlowRow{2, "UDP", 0.5}));
  EXPECT_EQ(s.source[2], (fl::EndpointRow{2, 2, "10.0.0.2"}));
  EXPECT_EQ(s.destination[0], (fl::EndpointRow{0, 3, "10.0.0.2"}));
}

TEST(Sectionize, ProtocolNames) {
  EXPECT_EQ(fl::protocol_name(6), "TCP");
  EXPECT_EQ(fl::protocol_name(17), "UDP");
  EXPECT_EQ(fl::protocol_name(1), "ICMP");
  EXPECT_EQ(fl::protocol_name(47), "47");
}

TEST(Sectionize, TablesAgreeOnRecordIds) {
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    auto c = flowlatin::testing::random_capture(rng, rng() % 200);
    auto s = fl::sectionize(c);
    ASSERT_EQ(s.protocol_flow.size(), c.records.size());
    ASSERT_EQ(s.source.size(), c.records.size());
    ASSERT_EQ(s.destination.size(), c.records.size());
    for (std::size_t k = 0; k < c.records.size(); ++k) {
      ASSERT_EQ(s.protocol_flow[k].record_id, static_cast<std::int64_t>(k));
      ASSERT_EQ(s.source[k].record_id, static_cast<std::int64_t>(k));
      ASSERT_EQ(s.destination[k].record_id, static_cast<std::int64_t>(k));
    }
  }
}

TEST(Sections, WrittenFilesUseTabsAndExactFloats) {
  flowlatin::testing::TempDir dir("sections");
  fl::SectionTables s;
  s.duration_seconds = 3;
  s.protocol_flow = {{0, "TCP", 1.0 / 3.0}};
  s.source = {{0, 4, "10.0.0.1"}};
  s.destination = {{0, 5, "10.0.0.2"}};
  fl::write_sections(s, dir.path());
  auto p = flowlatin::text::read_file((dir / "NetFlow-Data1").string());
  EXPECT_EQ(p, "0\tTCP\t0.3333333333333333\n");
  EXPECT_EQ(flowlatin::text::read_file((dir / "NetFlow-Data2").string()), "0\t4\t10.0.0.1\n");
  EXPECT_EQ(flowlatin::text::read_file((dir / "NetFlow-Data3").string()), "0\t5\t10.0.0.2\n");
}
