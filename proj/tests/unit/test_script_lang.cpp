#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "flowlatin/error.hpp"
#include "flowlatin/script.hpp"
#include "generators.hpp"
#include "temp_dir.hpp"

namespace sc = flowlatin::script;
using flowlatin::testing::Rng;
using sc::TokenKind;

namespace {

const char* kSectionLoads =
    "Protocol = LOAD 'NetFlow-Data1' AS (record_id:int, protocol:chararray, flow:float);\n"
    "Source = LOAD 'NetFlow-Data2' AS (record_id:int, src_if:int, src_ip:chararray);\n"
    "Destination = LOAD 'NetFlow-Data3' AS (record_id:int, dst_if:int, dst_ip:chararray);\n";

const char* kWordCount =
    "lines = LOAD 'in.txt' AS (line:chararray);\n"
    "words = FOREACH lines GENERATE FLATTEN(TOKENIZE(line)) AS word;\n"
    "grouped = GROUP words BY word;\n"
    "counts = FOREACH grouped GENERATE group, COUNT(words);\n"
    "STORE counts INTO 'out.txt';\n";

std::vector<TokenKind> kinds(const std::vector<sc::Token>& ts) {
  std::vector<TokenKind> out;
  for (const auto& t : ts) out.push_back(t.kind);
  return out;
}

}  // namespace

TEST(Lexer, LoadStatement) {
  auto ts = sc::tokenize_script("Protocol = LOAD 'NetFlow-Data1' AS (protocol:chararray, flow:int)");
  std::vector<TokenKind> want{TokenKind::Ident, TokenKind::Assign, TokenKind::Load,
                              TokenKind::String, TokenKind::As, TokenKind::LParen,
                              TokenKind::Ident, TokenKind::Colon, TokenKind::Ident,
                              TokenKind::Comma, TokenKind::Ident, TokenKind::Colon,
                              TokenKind::Ident, TokenKind::RParen};
  EXPECT_EQ(kinds(ts), want);
  EXPECT_EQ(ts[0].text, "Protocol");
  EXPECT_EQ(ts[3].text, "NetFlow-Data1");
}

TEST(Lexer, EmptyAndComments) {
  EXPECT_TRUE(sc::tokenize_script("").empty());
  EXPECT_TRUE(sc::tokenize_script("  -- only a comment\n\t").empty());
}

TEST(Lexer, KeywordsIgnoreCaseIdentifiersDoNot) {
  auto ts = sc::tokenize_script("load Load LOAD desc x X");
  EXPECT_EQ(ts[0].kind, TokenKind::Load);
  EXPECT_EQ(ts[1].kind, TokenKind::Load);
  EXPECT_EQ(ts[2].kind, TokenKind::Load);
  EXPECT_EQ(ts[3].kind, TokenKind::Desc);
  EXPECT_EQ(ts[4].text, "x");
  EXPECT_EQ(ts[5].text, "X");
}

TEST(Lexer, NumbersOperatorsAndEscapes) {
  auto ts = sc::tokenize_script("a::b.c >= 1.5e2 != 3 'it\\'s\\n'");
  std::vector<TokenKind> want{TokenKind::Ident, TokenKind::DoubleColon, TokenKind::Ident,
                              TokenKind::Dot,   TokenKind::Ident,       TokenKind::Ge,
                              TokenKind::Float, TokenKind::NotEq,       TokenKind::Integer,
                              TokenKind::String};
  EXPECT_EQ(kinds(ts), want);
  EXPECT_EQ(ts.back().text, "it's\n");
}

TEST(Lexer, UnterminatedStringHasPosition) {
  try {
    sc::tokenize_script("x = LOAD 'a");
    FAIL();
  } catch (const flowlatin::LexError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 10u);
  }
  EXPECT_THROW(sc::tokenize_script("a\n  #"), flowlatin::LexError);
}

TEST(Parser, SectionLoads) {
  auto plan = sc::parse_script(kSectionLoads);
  ASSERT_EQ(plan.nodes.size(), 3u);
  for (const char* alias : {"Protocol", "Source", "Destination"}) {
    ASSERT_TRUE(plan.find(alias)) << alias;
    EXPECT_TRUE(std::holds_alternative<sc::LoadOp>(plan.at(alias).op));
  }
  EXPECT_EQ(std::get<sc::LoadOp>(plan.at("Protocol").op).path, "NetFlow-Data1");
}

TEST(Parser, WordCountIsAFiveNodeChain) {
  auto plan = sc::parse_script(kWordCount);
  ASSERT_EQ(plan.nodes.size(), 5u);

  // Hand-built expectation.
  sc::LogicalPlan want;
  auto add = [&](std::string alias, sc::PlanOp op) {
    if (!alias.empty()) want.aliases[alias] = want.nodes.size();
    want.nodes.push_back({std::move(alias), std::move(op), std::nullopt});
  };
  add("lines", sc::LoadOp{"in.txt", flowlatin::data::parse_schema("line:chararray")});
  add("words", sc::ForeachOp{"lines",
                             {{sc::make_call(sc::Builtin::Flatten,
                                             {sc::make_call(sc::Builtin::Tokenize, {sc::make_field("line")})}),
                               "word"}}});
  add("grouped", sc::GroupOp{"words", {"word"}});
  add("counts", sc::ForeachOp{"grouped",
                              {{sc::make_field("group"), std::nullopt},
                               {sc::make_call(sc::Builtin::Count, {sc::make_field("words")}), std::nullopt}}});
  add("", sc::StoreOp{"counts", "out.txt"});
  EXPECT_TRUE(sc::same_plan(plan, want));
  for (std::size_t i = 1; i < plan.nodes.size(); ++i) {
    EXPECT_EQ(plan.inputs_of(i), std::vector<std::size_t>{i - 1});
  }
  EXPECT_EQ(plan.store_count(), 1u);
}

TEST(Parser, UndefinedAndReassignedAliases) {
  EXPECT_THROW(sc::parse_script("S = FILTER X BY a > 1;"), flowlatin::PlanError);
  EXPECT_THROW(sc::parse_script("A = LOAD 'a' AS (x:int); A = LOAD 'b' AS (x:int);"),
               flowlatin::PlanError);
  EXPECT_THROW(sc::parse_script("STORE nope INTO 'x';"), flowlatin::PlanError);
}

TEST(Parser, SyntaxErrorsCarryTokenPosition) {
  try {
    sc::parse_script("A = LOAD 'a' AS (x:int);\nB = FILTER A x > 1;");
    FAIL();
  } catch (const flowlatin::SyntaxError& e) {
    EXPECT_EQ(e.position(), 15u);  // token index of the 'x' where BY was expected
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 14u);
  }
  EXPECT_THROW(sc::parse_script("A = LOAD 'a' AS (x:int)"), flowlatin::ParseError);
  EXPECT_THROW(sc::parse_script("A = LOAD 'a' AS ();"), flowlatin::Error);
}

TEST(Infer, LoadFilterForeach) {
  std::string src = std::string(kSectionLoads) +
                    "Busy = FILTER Protocol BY flow > 0;\n"
                    "Scaled = FOREACH Busy GENERATE protocol, flow * 2, record_id + 1 AS next;\n";
  auto plan = sc::infer_schemas(sc::parse_script(src));
  EXPECT_EQ(plan.at("Protocol").schema->to_string(), "record_id:int, protocol:chararray, flow:float");
  EXPECT_EQ(*plan.at("Busy").schema, *plan.at("Protocol").schema);
  EXPECT_EQ(plan.at("Scaled").schema->to_string(), "protocol:chararray, $1:float, next:int");
}

TEST(Infer, GroupAndJoinShapes) {
  std::string src = std::string(kSectionLoads) +
                    "J = JOIN Source BY record_id, Destination BY record_id;\n"
                    "G = GROUP Protocol BY protocol;\n"
                    "C = FOREACH G GENERATE group, COUNT(Protocol), SUM(Protocol.flow) AS total;\n";
  auto plan = sc::infer_schemas(sc::parse_script(src));
  const auto& j = *plan.at("J").schema;
  ASSERT_EQ(j.size(), 6u);
  EXPECT_EQ(j.to_string(),
            "Source::record_id:int, src_if:int, src_ip:chararray, Destination::record_id:int, "
            "dst_if:int, dst_ip:chararray");
  const auto& g = *plan.at("G").schema;
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g.fields[0].name, "group");
  EXPECT_EQ(g.fields[1].name, "Protocol");
  EXPECT_EQ(g.fields[1].type.kind, flowlatin::data::TypeKind::Bag);
  EXPECT_EQ(plan.at("C").schema->to_string(), "group:chararray, $1:int, total:float");
}

TEST(Infer, Errors) {
  EXPECT_THROW(sc::infer_schemas(sc::parse_script(std::string(kSectionLoads) +
                                                  "B = FILTER Protocol BY nope > 1;")),
               flowlatin::TypeError);
  EXPECT_THROW(sc::infer_schemas(sc::parse_script(std::string(kSectionLoads) +
                                                  "B = FOREACH Protocol GENERATE COUNT(protocol);")),
               flowlatin::TypeError);
  EXPECT_THROW(sc::infer_schemas(sc::parse_script(std::string(kSectionLoads) +
                                                  "B = FOREACH Protocol GENERATE TOKENIZE(flow);")),
               flowlatin::TypeError);
  // Unqualified name that collided in the join is ambiguous.
  EXPECT_THROW(sc::infer_schemas(sc::parse_script(
                   std::string(kSectionLoads) + "J = JOIN Source BY record_id, Destination BY record_id;\n"
                                                "K = FILTER J BY record_id > 1;")),
               flowlatin::TypeError);
}

TEST(Render, RoundTripsExamples) {
  for (const std::string& src :
       {std::string(kWordCount), std::string(kSectionLoads) +
                                     "J = JOIN Source BY (record_id, src_if), Destination BY (record_id, dst_if);\n"
                                     "O = ORDER J BY src_ip DESC;\n"
                                     "F = FILTER O BY (dst_if >= 2 AND src_if != 1) OR dst_ip == 'it\\'s';\n"
                                     "P = FOREACH F GENERATE src_ip AS ip, -1.5 * (dst_if - 2) / 4;\n"
                                     "STORE P INTO 'p out';\n"}) {
    auto plan = sc::parse_script(src);
    auto text = sc::render_plan(plan);
    auto again = sc::parse_script(text);
    EXPECT_TRUE(sc::same_plan(plan, again)) << text;
    EXPECT_EQ(sc::render_plan(again), text);
  }
}

TEST(Render, RoundTripsGeneratedPlans) {
  Rng rng(8);
  flowlatin::testing::TempDir dir("render");
  for (int i = 0; i < 60; ++i) {
    auto c = flowlatin::testing::random_plan(rng, dir.path());
    auto plan = sc::parse_script(c.script);
    auto again = sc::parse_script(sc::render_plan(plan));
    ASSERT_TRUE(sc::same_plan(plan, again)) << c.script << "\n---\n" << sc::render_plan(plan);
  }
}

// Truncated, spliced and token-shuffled scripts either parse or raise a
// library error; nothing else escapes.
TEST(Parser, FuzzedInputNeverEscapes) {
  Rng rng(77);
  flowlatin::testing::TempDir dir("fuzz");
  std::vector<std::string> corpus{kWordCount, std::string(kSectionLoads) + "STORE Source INTO 'x';"};
  for (int i = 0; i < 20; ++i) corpus.push_back(flowlatin::testing::random_plan(rng, dir.path()).script);
  const char* noise[] = {"(", ")", ";", "=", "'", "--", "::", ".", "BY", "GROUP", "x", "1e", "\\", "\n"};
  int parsed = 0, rejected = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string s = corpus[rng() % corpus.size()];
    switch (rng() % 3) {
      case 0: s = s.substr(0, rng() % (s.size() + 1)); break;
      case 1: s.insert(rng() % (s.size() + 1), noise[rng() % std::size(noise)]); break;
      default: {
        std::size_t a = rng() % (s.size() + 1);
        std::size_t b = rng() % (s.size() + 1);
        if (a > b) std::swap(a, b);
        s.erase(a, std::min<std::size_t>(b - a, 12));
      }
    }
    try {
      sc::infer_schemas(sc::parse_script(s));
      ++parsed;
    } catch (const flowlatin::Error&) {
      ++rejected;
    } catch (const std::exception& e) {
      FAIL() << "non-library exception " << e.what() << " for:\n" << s;
    }
  }
  EXPECT_GT(parsed, 0);
  EXPECT_GT(rejected, 0);
}
