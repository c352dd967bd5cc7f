#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <map>
#include <thread>

#include "flowlatin/analyses.hpp"
#include "flowlatin/bench.hpp"
#include "flowlatin/error.hpp"
#include "flowlatin/flow_model.hpp"
#include "flowlatin/jobs.hpp"
#include "flowlatin/planner.hpp"
#include "flowlatin/script.hpp"
#include "flowlatin/text.hpp"

namespace flowlatin::cli {

namespace fs = std::filesystem;

namespace {

jobs::RunOptions run_options(const RunConfig& cfg) {
  jobs::RunOptions o;
  o.workers = cfg.workers;
  o.split_bytes = cfg.split_bytes;
  o.work_dir = cfg.work_dir;
  return o;
}

/// Removes the work directory on success, but only when this command
/// created it, so a pre-existing directory is never wiped.
class WorkDirGuard {
 public:
  explicit WorkDirGuard(const RunConfig& cfg) : cfg_(cfg), existed_(fs::exists(cfg.work_dir)) {}
  void success() {
    if (cfg_.keep || existed_) return;
    std::error_code ec;
    fs::remove_all(cfg_.work_dir, ec);
  }

 private:
  const RunConfig& cfg_;
  bool existed_;
};

int cmd_ingest(const RunConfig&, const std::string& capture, const std::string& out_dir,
               std::ostream& out) {
  auto cap = flow::read_capture_file(capture);
  auto sections = flow::sectionize(cap);
  flow::write_sections(sections, out_dir);
  out << "ingested " << cap.records.size() << " records over " << cap.duration_seconds()
      << " s into " << (out_dir.empty() ? "." : out_dir) << "\n";
  return kExitOk;
}

int cmd_run(const RunConfig& cfg, const std::string& script_path, bool explain, std::ostream& out) {
  auto source = text::read_file(script_path);
  auto plan = script::infer_schemas(script::parse_script(source));
  auto graph = plan::compile(plan);
  if (explain) {
    out << plan::explain(graph);
    return kExitOk;
  }
  WorkDirGuard guard(cfg);
  auto result = jobs::run_graph(graph, run_options(cfg));
  for (const auto& s : graph.stores) {
    out << "stored " << result.stored.at(s.path).size() << " rows into " << s.path << "\n";
  }
  guard.success();
  return kExitOk;
}

int cmd_analyze(const RunConfig& cfg, const std::string& capture, const std::string& kind_name,
                const std::string& out_file, std::ostream& out) {
  auto kind = analysis::parse_kind(kind_name);
  if (!kind) throw std::invalid_argument("unknown analysis kind " + kind_name);
  auto sections = flow::sectionize(flow::read_capture_file(capture));
  WorkDirGuard guard(cfg);
  auto report = analysis::analyze_with_script(*kind, sections, run_options(cfg));
  auto text = analysis::render_report(report);
  if (out_file.empty()) {
    out << text;
  } else {
    text::write_file(out_file, text);
  }
  guard.success();
  return kExitOk;
}

int cmd_bench(const RunConfig& cfg, const std::vector<std::size_t>& sizes, int reps,
              std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  bench::SweepOptions opts;
  opts.sizes_kb = sizes;
  opts.repetitions = reps;
  opts.seed = seed;
  opts.workers = cfg.workers;
  opts.split_bytes = cfg.split_bytes;
  opts.work_dir = cfg.work_dir / "bench";
  WorkDirGuard guard(cfg);
  auto report = bench::run_sweep(opts);
  bench::write_report_files(report, out_dir);
  out << bench::render_markdown(report);
  guard.success();
  return kExitOk;
}

// --- console -------------------------------------------------------------

class Console {
 public:
  Console(const RunConfig& cfg, std::ostream& out, std::ostream& err)
      : cfg_(cfg), out_(out), err_(err), dir_(cfg.work_dir / "console") {}

  void run(std::istream& in) {
    fs::create_directories(dir_);
    std::string buffer;
    std::string line;
    prompt(buffer);
    while (std::getline(in, line)) {
      std::string_view trimmed = trim(line);
      if (buffer.empty() && (trimmed == "quit" || trimmed == "exit")) break;
      if (buffer.empty() && starts_with_word(trimmed, "dump")) {
        dump(trim(trimmed.substr(4)));
      } else if (!trimmed.empty()) {
        buffer += line;
        buffer += '\n';
        if (trimmed.back() == ';') {
          execute(buffer);
          buffer.clear();
        }
      }
      prompt(buffer);
    }
    if (!trim(buffer).empty()) execute(buffer);
  }

 private:
  struct Materialized {
    fs::path path;
    data::Schema schema;
    std::optional<script::GroupOp> group;
  };

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && text::is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && text::is_space(s.back())) s.remove_suffix(1);
    return s;
  }

  static bool starts_with_word(std::string_view s, std::string_view word) {
    if (s.size() < word.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(s[i])) != word[i]) return false;
    }
    return s.size() == word.size() || text::is_space(s[word.size()]);
  }

  void prompt(const std::string& buffer) { out_ << (buffer.empty() ? "flowlatin> " : "      ...> ") << std::flush; }

  void dump(std::string_view alias) {
    if (!alias.empty() && alias.back() == ';') alias.remove_suffix(1);
    alias = trim(alias);
    auto it = known_.find(std::string(alias));
    if (it == known_.end()) {
      err_ << "error: undefined alias '" << alias << "'\n";
      return;
    }
    out_ << jobs::render_rows(jobs::read_dataset(it->second.path, it->second.schema,
                                                 script::LoadFormat::Exact));
  }

  /// A plan where every materialized alias is a load of its exact file.
  /// Groups over a loaded alias stay GROUP nodes so aggregates can follow.
  script::LogicalPlan base_plan() const {
    script::LogicalPlan plan;
    auto regroup = [&](const Materialized& m) {
      return m.group && known_.count(m.group->input) && !known_.at(m.group->input).group;
    };
    for (const auto& [alias, m] : known_) {
      if (regroup(m)) continue;
      plan.aliases[alias] = plan.nodes.size();
      plan.nodes.push_back({alias, script::LoadOp{m.path.string(), m.schema, script::LoadFormat::Exact},
                            m.schema});
    }
    for (const auto& [alias, m] : known_) {
      if (!regroup(m)) continue;
      plan.aliases[alias] = plan.nodes.size();
      plan.nodes.push_back({alias, *m.group, m.schema});
    }
    return plan;
  }

  void execute(const std::string& text) {
    try {
      auto tokens = script::tokenize_script(text);
      std::vector<script::Token> stmt;
      for (auto& t : tokens) {
        stmt.push_back(t);
        if (t.kind == script::TokenKind::Semicolon) {
          execute_statement(stmt);
          stmt.clear();
        }
      }
      if (!stmt.empty()) {
        stmt.push_back({script::TokenKind::Semicolon, ";", stmt.back().line, stmt.back().column + 1});
        execute_statement(stmt);
      }
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
    }
  }

  void execute_statement(const std::vector<script::Token>& stmt) {
    auto plan = base_plan();
    script::append_statement(plan, stmt);
    const auto& node = plan.nodes.back();
    jobs::RunOptions opts = run_options(cfg_);
    opts.work_dir = dir_ / "work";
    if (std::holds_alternative<script::StoreOp>(node.op)) {
      auto result = jobs::run_graph(plan::compile(script::infer_schemas(plan)), opts);
      for (const auto& [path, rows] : result.stored) {
        out_ << "stored " << rows.size() << " rows into " << path << "\n";
      }
      return;
    }
    const std::string alias = node.alias;
    const fs::path target = dir_ / (alias + ".rows");
    plan.nodes.push_back({"", script::StoreOp{alias, target.string()}, std::nullopt});
    plan = script::infer_schemas(std::move(plan));
    opts.write_stores = false;
    auto result = jobs::run_graph(plan::compile(plan), opts);
    std::string bytes;
    for (const auto& row : result.stored.at(target.string())) {
      bytes += data::encode_row(row);
      bytes += '\n';
    }
    text::write_file(target.string(), bytes);
    std::optional<script::GroupOp> group;
    if (const auto* g = std::get_if<script::GroupOp>(&plan.at(alias).op)) group = *g;
    known_[alias] = {target, *plan.at(alias).schema, group};
    out_ << alias << ": " << result.stored.at(target.string()).size() << " rows ("
         << plan.at(alias).schema->to_string() << ")\n";
  }

  const RunConfig& cfg_;
  std::ostream& out_;
  std::ostream& err_;
  fs::path dir_;
  std::map<std::string, Materialized> known_;
};

}  // namespace

std::size_t default_workers() {
  if (const char* env = std::getenv("FLOWLATIN_WORKERS")) {
    if (auto n = text::parse_integer<std::size_t>(env); n && *n >= 1) return *n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
             std::ostream& err) {
  RunConfig cfg;
  cfg.workers = default_workers();
  std::string work_dir = cfg.work_dir.string();

  CLI::App app{"flowlatin: NetFlow analysis on a local map-reduce engine"};
  app.set_help_all_flag("--help-all");
  app.require_subcommand(1);
  app.add_option("--workers", cfg.workers, "worker threads (env FLOWLATIN_WORKERS)")
      ->check(CLI::PositiveNumber);
  app.add_option("--split-bytes", cfg.split_bytes, "target input split size")
      ->check(CLI::Range(std::size_t{256}, std::numeric_limits<std::size_t>::max()));
  app.add_option("--work-dir", work_dir, "directory for intermediate datasets");
  app.add_flag("--keep", cfg.keep, "keep the work directory after success");

  std::string capture, out_dir = ".", script_path, kind, report_out;
  bool explain = false;
  std::vector<std::size_t> sizes{13, 26, 52, 104, 208};
  int reps = 5;
  std::uint64_t seed = 7;

  auto* ingest = app.add_subcommand("ingest", "split a capture into the three section files");
  ingest->add_option("capture", capture, "capture text file")->required();
  ingest->add_option("--out-dir", out_dir, "directory for NetFlow-Data1/2/3");

  auto* run = app.add_subcommand("run", "compile and execute a script");
  run->add_option("script", script_path, "script file")->required();
  run->add_flag("--explain", explain, "print the job graph without executing");

  auto* analyze = app.add_subcommand("analyze", "run a built-in traffic analysis");
  analyze->add_option("capture", capture, "capture text file")->required();
  analyze->add_option("--kind", kind, "src-if | src-ip | protocol | node")
      ->required()
      ->check(CLI::IsMember({"src-if", "src-ip", "protocol", "node"}));
  analyze->add_option("--out", report_out, "write the report here instead of stdout");

  auto* bench = app.add_subcommand("bench", "word-count benchmark sweep");
  bench->add_option("--sizes", sizes, "corpus sizes in KB, ascending")->delimiter(',');
  bench->add_option("--reps", reps, "repetitions per size")->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "corpus seed");
  bench->add_option("--out-dir", out_dir, "directory for bench.csv, bench.md, fig4.csv, fig5.csv");

  auto* repl = app.add_subcommand("repl", "interactive statement-at-a-time console");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  cfg.work_dir = work_dir;

  try {
    if (*ingest) return cmd_ingest(cfg, capture, out_dir, out);
    if (*run) return cmd_run(cfg, script_path, explain, out);
    if (*analyze) return cmd_analyze(cfg, capture, kind, report_out, out);
    if (*bench) return cmd_bench(cfg, sizes, reps, seed, out_dir, out);
    if (*repl) {
      WorkDirGuard guard(cfg);
      Console(cfg, out, err).run(in);
      guard.success();
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace flowlatin::cli
