// Command-line front end: run simulations, sweep seeds, analyze quorum
// systems, and check recorded traces.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "wabd/wabd.hpp"

namespace fs = std::filesystem;
using namespace wabd;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct RunChecks {
  LinearizabilityResult linearizability;
  InvariantReport invariants;
  std::size_t incomplete = 0;

  bool ok() const { return linearizability.ok && invariants.ok() && incomplete == 0; }
};

/// Liveness cutoff: operations invoked this long before the end must finish.
constexpr Micros kLivenessMargin = 30'000'000;

RunChecks check_run(const MetricsReport& r) {
  RunChecks c;
  c.linearizability = check_linearizability(r.history());
  c.invariants = check_protocol_invariants(r.trace, r.config.system());
  c.incomplete = r.incomplete_before(r.config.duration - kLivenessMargin);
  return c;
}

void print_checks(const RunChecks& c, const MetricsReport& r) {
  const auto h = r.history();
  if (c.linearizability.ok) {
    fmt::print("linearizability: ok ({} operations)\n", h.size());
  } else {
    fmt::print("linearizability: VIOLATION: {}\n", c.linearizability.reason);
    if (c.linearizability.witness) {
      for (std::size_t i : {c.linearizability.witness->first, c.linearizability.witness->second}) {
        if (i >= h.size()) continue;
        const auto& op = h[i];
        fmt::print("  client {} {} {} invoke={:.3f} complete={}\n", op.client, op_name(op.kind),
                   op.value.empty() ? "-" : op.value, to_ms(op.invoke),
                   op.complete ? fmt::format("{:.3f}", to_ms(*op.complete)) : "pending");
      }
    }
  }
  fmt::print("invariants: {} failure(s), {} installs, {} phases checked, {} lagging completions\n",
             c.invariants.failures.size(), c.invariants.installs, c.invariants.phases_checked,
             c.invariants.lagging_completions);
  for (const auto& f : c.invariants.failures) fmt::print("  [{}] record {}: {}\n", f.check, f.position, f.what);
  fmt::print("liveness: {} operation(s) invoked before end-30s left incomplete\n", c.incomplete);
}

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return config_from_json(read_json(path));
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
            const std::string& mode, bool deliveries) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (mode == "weighted") cfg.protocol.weighted = true;
  if (mode == "static") cfg.protocol.weighted = false;
  if (deliveries) cfg.record_deliveries = true;

  MetricsReport r = run_experiment(cfg);
  RunChecks checks = check_run(r);

  const auto& q = r.post_convergence_quorum_latency;
  fmt::print("seed {} mode {}: {} ops completed, last view {}, mean quorum latency {:.3f} ms "
             "(post-convergence {:.3f} ms over {} ops)\n",
             cfg.seed, cfg.protocol.weighted ? "weighted" : "static", r.completed(), r.last_view,
             r.quorum_latency.mean, q.mean, q.count);
  print_checks(checks, r);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "ops.csv", r.csv());
    nlohmann::json summary = r.summary();
    summary["checks"] = {{"linearizable", checks.linearizability.ok},
                         {"invariant_failures", checks.invariants.failures.size()},
                         {"incomplete_before_cutoff", checks.incomplete}};
    write_file(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
    write_file(fs::path(out_dir) / "trace.log", r.trace.to_string());
    fmt::print("wrote {}/ops.csv, summary.json, trace.log\n", out_dir);
  }
  return checks.ok() ? 0 : 1;
}

std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& text) {
  auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      auto v = std::stoull(text);
      return {v, v};
    }
    auto a = std::stoull(text.substr(0, dots));
    auto b = std::stoull(text.substr(dots + 2));
    if (b < a) throw std::invalid_argument("empty range");
    return {a, b};
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("--seeds", "expected a..b, got '" + text + "'");
  }
}

int cmd_sweep(const std::string& config_path, const std::string& seeds, const std::string& out_dir,
              const std::string& mode) {
  ExperimentConfig base = load_config(config_path);
  if (mode == "weighted") base.protocol.weighted = true;
  if (mode == "static") base.protocol.weighted = false;
  auto [first, last] = parse_range(seeds);

  std::string csv = "seed,completed,mean_quorum_latency_ms,post_convergence_mean_ms,last_view,linearizable,"
                    "invariant_failures,incomplete\n";
  std::size_t failed = 0;
  double sum_post = 0.0;
  std::size_t runs = 0;
  for (std::uint64_t s = first; s <= last; ++s) {
    ExperimentConfig cfg = base;
    cfg.seed = s;
    MetricsReport r = run_experiment(cfg);
    RunChecks c = check_run(r);
    const auto row = fmt::format("{},{},{:.3f},{:.3f},{},{},{},{}\n", s, r.completed(), r.quorum_latency.mean,
                                 r.post_convergence_quorum_latency.mean, r.last_view, c.linearizability.ok ? 1 : 0,
                                 c.invariants.failures.size(), c.incomplete);
    csv += row;
    fmt::print("{}", row);
    if (!c.ok()) ++failed;
    sum_post += r.post_convergence_quorum_latency.mean;
    ++runs;
  }
  fmt::print("{} run(s), {} with failures, mean post-convergence quorum latency {:.3f} ms\n", runs, failed,
             runs ? sum_post / static_cast<double>(runs) : 0.0);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "sweep.csv", csv);
  }
  return failed == 0 ? 0 : 1;
}

int cmd_analyze(const std::string& spec_path, bool as_json) {
  auto spec = analysis::analysis_spec_from_json(read_json(spec_path));
  auto reports = analysis::analyze(spec);
  if (as_json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : reports) out.push_back(analysis::report_to_json(r));
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  for (const auto& r : reports) {
    std::string quorums;
    for (auto q : r.minimal.quorums) quorums += (quorums.empty() ? "" : " ") + analysis::quorum_text(r.minimal, q);
    fmt::print("{}: {} quorum(s), minimal: {}\n", r.name, r.system.quorums.size(), quorums);
    if (r.latency_ms) fmt::print("  quorum latency: {:g} ms\n", *r.latency_ms);
    if (r.capacity) fmt::print("  capacity (read_fraction={:g}): {:.5f} ops/sec\n", spec.read_fraction, *r.capacity);
  }
  return 0;
}

int cmd_check_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Trace trace = Trace::read(in);
  auto report = check_protocol_invariants(trace);
  auto history = history_from_trace(trace);
  auto lin = check_linearizability(history);
  fmt::print("{} records, {} operations\n", trace.records().size(), history.size());
  fmt::print("linearizability: {}\n", lin.ok ? "ok" : "VIOLATION: " + lin.reason);
  fmt::print("invariants: {} failure(s), {} installs, {} phases checked\n", report.failures.size(), report.installs,
             report.phases_checked);
  for (const auto& f : report.failures) fmt::print("  [{}] record {}: {}\n", f.check, f.position, f.what);
  return lin.ok && report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted ABD storage: simulation, checking and quorum analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string mode;
  std::optional<std::uint64_t> seed;
  bool deliveries = false;
  auto* run = app.add_subcommand("run", "Run one simulation");
  run->add_option("--config", config_path, "Experiment config (JSON); defaults to the reference setup")
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Directory for ops.csv, summary.json and trace.log");
  run->add_option("--mode", mode, "Override protocol mode")->check(CLI::IsMember({"weighted", "static"}));
  run->add_flag("--deliveries", deliveries, "Record every message delivery in the trace");

  std::string seeds = "0..9";
  auto* sweep = app.add_subcommand("sweep", "Run a seed range and check every run");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  sweep->add_option("--seeds", seeds, "Seed range a..b (inclusive)");
  sweep->add_option("--out", out_dir, "Directory for sweep.csv");
  sweep->add_option("--mode", mode, "Override protocol mode")->check(CLI::IsMember({"weighted", "static"}));

  std::string spec_path;
  bool as_json = false;
  auto* analyze = app.add_subcommand("analyze", "Quorum latency and capacity of quorum systems");
  analyze->add_option("spec", spec_path, "Quorum spec (JSON)")->required()->check(CLI::ExistingFile);
  analyze->add_flag("--json", as_json, "Print JSON");

  std::string trace_path;
  auto* check = app.add_subcommand("check-trace", "Check a recorded trace");
  check->add_option("trace", trace_path, "Trace log")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, out_dir, mode, deliveries);
    if (*sweep) return cmd_sweep(config_path, seeds, out_dir, mode);
    if (*analyze) return cmd_analyze(spec_path, as_json);
    if (*check) return cmd_check_trace(trace_path);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
