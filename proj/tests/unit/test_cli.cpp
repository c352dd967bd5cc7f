#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "flowlatin/text.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using flowlatin::testing::TempDir;

namespace {

const fs::path kFixtures{FLOWLATIN_FIXTURE_DIR};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = flowlatin::cli::dispatch(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, flowlatin::cli::kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, flowlatin::cli::kExitUsage);
  EXPECT_EQ(invoke({"run"}).code, flowlatin::cli::kExitUsage);
  EXPECT_EQ(invoke({"--workers", "0", "run", "x.pig"}).code, flowlatin::cli::kExitUsage);
  EXPECT_EQ(invoke({"--split-bytes", "100", "run", "x.pig"}).code, flowlatin::cli::kExitUsage);
  auto bad_kind = invoke({"analyze", (kFixtures / "sample.cap").string(), "--kind", "volume"});
  EXPECT_EQ(bad_kind.code, flowlatin::cli::kExitUsage);
  EXPECT_FALSE(bad_kind.err.empty());
  EXPECT_EQ(invoke({"analyze", (kFixtures / "sample.cap").string()}).code,
            flowlatin::cli::kExitUsage);
}

TEST(Cli, HelpIsNotAnError) {
  auto r = invoke({"--help"});
  EXPECT_EQ(r.code, flowlatin::cli::kExitOk);
  EXPECT_NE(r.out.find("analyze"), std::string::npos);
}

TEST(Cli, MissingFilesFailWithCode2) {
  TempDir dir("cli-missing");
  auto work = (dir / "work").string();
  auto r = invoke({"--work-dir", work, "analyze", (dir / "nope.cap").string(), "--kind", "protocol"});
  EXPECT_EQ(r.code, flowlatin::cli::kExitFailure);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(invoke({"run", (dir / "nope.pig").string()}).code, flowlatin::cli::kExitFailure);
  EXPECT_EQ(invoke({"ingest", (dir / "nope.cap").string()}).code, flowlatin::cli::kExitFailure);
}

TEST(Cli, AnalyzeProtocolOnSample) {
  TempDir dir("cli-analyze");
  auto work = dir / "work";
  auto r = invoke({"--workers", "2", "--work-dir", work.string(), "analyze",
                   (kFixtures / "sample.cap").string(), "--kind", "protocol"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "#analysis,protocol,2\nTCP\t1\t2\nUDP\t0.5\t1\n");
  EXPECT_FALSE(fs::exists(work));
}

TEST(Cli, AnalyzeWritesReportFileAndKeepsWorkDir) {
  TempDir dir("cli-analyze-out");
  auto work = dir / "work";
  auto report = dir / "report.txt";
  auto r = invoke({"--keep", "--work-dir", work.string(), "analyze",
                   (kFixtures / "sample.cap").string(), "--kind", "src-if", "--out",
                   report.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(flowlatin::text::read_file(report.string()),
            "#analysis,src-if,2\n1\t1\t2\n2\t0.5\t1\n");
  EXPECT_TRUE(fs::exists(work));
}

TEST(Cli, PreexistingWorkDirIsLeftAlone) {
  TempDir dir("cli-preexisting");
  auto work = dir / "work";
  fs::create_directories(work);
  flowlatin::text::write_file((work / "mine.txt").string(), "keep me\n");
  auto r = invoke({"--work-dir", work.string(), "analyze", (kFixtures / "sample.cap").string(),
                   "--kind", "node"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(work / "mine.txt"));
}

TEST(Cli, IngestWritesThreeSections) {
  TempDir dir("cli-ingest");
  auto r = invoke({"ingest", (kFixtures / "sample.cap").string(), "--out-dir", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("3 records"), std::string::npos);
  for (const char* name : {"NetFlow-Data1", "NetFlow-Data2", "NetFlow-Data3"}) {
    ASSERT_TRUE(fs::exists(dir / name)) << name;
    EXPECT_EQ(count_lines(flowlatin::text::read_file((dir / name).string())), 3u) << name;
  }
}

TEST(Cli, RunAndExplain) {
  TempDir dir("cli-run");
  flowlatin::text::write_file((dir / "input.txt").string(), "to be or not to be\n");
  std::string script = flowlatin::text::read_file((kFixtures / "wc.pig").string());
  auto replace = [&](const std::string& from, const std::string& to) {
    auto at = script.find(from);
    ASSERT_NE(at, std::string::npos);
    script.replace(at, from.size(), to);
  };
  replace("'input.txt'", "'" + (dir / "input.txt").string() + "'");
  replace("'counts.txt'", "'" + (dir / "counts.txt").string() + "'");
  auto script_path = dir / "wc.pig";
  flowlatin::text::write_file(script_path.string(), script);
  auto work = dir / "work";

  auto explained = invoke({"--work-dir", work.string(), "run", script_path.string(), "--explain"});
  ASSERT_EQ(explained.code, 0) << explained.err;
  EXPECT_EQ(explained.out.rfind("job 0 ", 0), 0u);
  EXPECT_NE(explained.out.find("store "), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "counts.txt"));
  EXPECT_FALSE(fs::exists(work));

  auto ran = invoke({"--work-dir", work.string(), "run", script_path.string()});
  ASSERT_EQ(ran.code, 0) << ran.err;
  EXPECT_EQ(ran.out, "stored 4 rows into " + (dir / "counts.txt").string() + "\n");
  EXPECT_EQ(flowlatin::text::read_file((dir / "counts.txt").string()),
            "be\t2\nnot\t1\nor\t1\nto\t2\n");
  EXPECT_FALSE(fs::exists(work));
}

TEST(Cli, RunReportsScriptErrors) {
  TempDir dir("cli-bad-script");
  auto path = dir / "bad.pig";
  flowlatin::text::write_file(path.string(), "a = LOAD 'x' AS (f:int);\nb = FILTER a BY g > 1;\n");
  auto r = invoke({"run", path.string(), "--explain"});
  EXPECT_EQ(r.code, flowlatin::cli::kExitFailure);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, BenchSingleSize) {
  TempDir dir("cli-bench");
  auto r = invoke({"--workers", "2", "--work-dir", (dir / "work").string(), "bench", "--sizes",
                   "13", "--reps", "1", "--out-dir", (dir / "report").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| 1 | Word-Count | 13 kb |"), std::string::npos);
  auto csv = flowlatin::text::read_file((dir / "report" / "bench.csv").string());
  EXPECT_EQ(count_lines(csv), 2u);
  for (const char* name : {"bench.md", "fig4.csv", "fig5.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "report" / name)) << name;
  }
  EXPECT_FALSE(fs::exists(dir / "work"));
}

TEST(Cli, BenchRejectsUnsortedSizes) {
  TempDir dir("cli-bench-bad");
  auto r = invoke({"--work-dir", (dir / "work").string(), "bench", "--sizes", "26,13", "--reps",
                   "1", "--out-dir", dir.path().string()});
  EXPECT_EQ(r.code, flowlatin::cli::kExitFailure);
}

TEST(Cli, ReplSession) {
  TempDir dir("cli-repl");
  flowlatin::text::write_file((dir / "in.txt").string(), "x y x\nz\n");
  std::string session =
      "lines = LOAD '" + (dir / "in.txt").string() + "' AS (line:chararray);\n"
      "words = FOREACH lines\n"
      "  GENERATE FLATTEN(TOKENIZE(line)) AS word;\n"
      "g = GROUP words BY word;\n"
      "c = FOREACH g GENERATE group, COUNT(words);\n"
      "dump c\n"
      "oops = FILTER nothere BY 1;\n"
      "STORE c INTO '" + (dir / "c.txt").string() + "';\n"
      "quit\n"
      "dump c\n";
  auto r = invoke({"--work-dir", (dir / "work").string(), "repl"}, session);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("words: 4 rows"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("c: 3 rows"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("x\t2\ny\t1\nz\t1\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("      ...> "), std::string::npos);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(flowlatin::text::read_file((dir / "c.txt").string()), "x\t2\ny\t1\nz\t1\n");
  // quit stops the session, so the trailing dump never runs
  EXPECT_EQ(r.out.find("x\t2\ny\t1\nz\t1\n"), r.out.rfind("x\t2\ny\t1\nz\t1\n"));
}

TEST(Cli, DefaultWorkersFromEnvironment) {
  ::setenv("FLOWLATIN_WORKERS", "3", 1);
  EXPECT_EQ(flowlatin::cli::default_workers(), 3u);
  ::setenv("FLOWLATIN_WORKERS", "0", 1);
  EXPECT_GE(flowlatin::cli::default_workers(), 1u);
  ::setenv("FLOWLATIN_WORKERS", "lots", 1);
  EXPECT_GE(flowlatin::cli::default_workers(), 1u);
  ::unsetenv("FLOWLATIN_WORKERS");
}
