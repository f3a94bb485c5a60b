#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "wabd/client.hpp"
#include "wabd/invariants.hpp"
#include "wabd/linearizability.hpp"
#include "wabd/runtime.hpp"
#include "wabd/server.hpp"

namespace wabd {

/// How link latencies are generated.
///  - Access: server i sits behind an access link of round trip
///    `server_rtt_ms[i]`; client<->server one-way is r_i/2 and
///    server<->server one-way is (r_i + r_j)/2. Constant for the run.
///  - RandomAccess: same shape, with every r_i redrawn uniformly from
///    [min_rtt_ms, max_rtt_ms] every `delta`.
///  - Matrix: explicit one-way matrices over all processes (servers first,
///    then clients), one per epoch.
struct LatencyModel {
  enum class Kind { Access, RandomAccess, Matrix };
  struct Epoch {
    Micros start = 0;
    std::vector<std::vector<double>> one_way_ms;
  };

  Kind kind = Kind::Access;
  std::vector<double> server_rtt_ms{20, 45, 100, 140, 180};
  double min_rtt_ms = 10.0;
  double max_rtt_ms = 200.0;
  Micros delta = from_ms(10000);
  std::vector<Epoch> epochs;
};

struct CrashSpec {
  ServerId server = 0;
  Micros at = 0;
};

struct ExperimentConfig {
  int servers = 5;
  int f = 1;
  double epsilon = 0.1;
  int clients = 10;
  double read_ratio = 0.5;
  Micros duration = from_ms(200000);
  Micros warmup = from_ms(30000);  ///< ops invoked earlier are excluded from post-convergence stats
  ProtocolSettings protocol;
  LatencyModel latency;
  double jitter = 0.1;
  std::vector<CrashSpec> crashes;
  std::uint64_t seed = 0;
  bool record_deliveries = false;

  SystemConfig system() const { return make_config(servers, f, epsilon); }

  /// Throws ConfigError on any inconsistency.
  void validate() const {
    system();
    if (duration <= 0) throw ConfigError("duration must be > 0");
    if (warmup < 0) throw ConfigError("warmup must be >= 0");
    if (clients < 1) throw ConfigError("need at least one client");
    if (!(read_ratio >= 0.0 && read_ratio <= 1.0)) throw ConfigError("read_ratio must be in [0, 1]");
    if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("jitter must be in [0, 1)");
    if (!(tau() >= 0.0)) throw ConfigError("tau must be >= 0");
    const auto& t = protocol.timers;
    if (t.view_timeout <= 0 || t.propose_interval <= 0 || t.ping_interval <= 0 || t.resend_interval <= 0)
      throw ConfigError("timer intervals must be > 0");
    std::set<ServerId> crashed;
    for (const auto& c : crashes) {
      if (c.server >= static_cast<ServerId>(servers)) throw ConfigError("crash plan names an unknown server");
      if (c.at < 0) throw ConfigError("crash time must be >= 0");
      crashed.insert(c.server);
    }
    if (static_cast<int>(crashed.size()) > f) throw ConfigError("crash plan kills more than f servers");
    switch (latency.kind) {
      case LatencyModel::Kind::Access:
        if (static_cast<int>(latency.server_rtt_ms.size()) != servers)
          throw ConfigError("server_rtt_ms needs one entry per server");
        for (double r : latency.server_rtt_ms)
          if (!(r > 0.0)) throw ConfigError("RTTs must be > 0");
        break;
      case LatencyModel::Kind::RandomAccess:
        if (!(latency.min_rtt_ms > 0.0 && latency.min_rtt_ms <= latency.max_rtt_ms))
          throw ConfigError("need 0 < min_rtt_ms <= max_rtt_ms");
        if (latency.delta <= 0) throw ConfigError("delta_ms must be > 0");
        break;
      case LatencyModel::Kind::Matrix: {
        if (latency.epochs.empty()) throw ConfigError("matrix latency needs at least one epoch");
        const std::size_t p = static_cast<std::size_t>(servers + clients);
        for (const auto& e : latency.epochs) {
          if (e.one_way_ms.size() != p) throw ConfigError("latency matrix must be (servers+clients) square");
          for (const auto& row : e.one_way_ms)
            if (row.size() != p) throw ConfigError("latency matrix must be (servers+clients) square");
        }
        break;
      }
    }
  }

  double tau() const noexcept { return protocol.tau; }
};

namespace detail {

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + stream);
  return rng.next();
}

inline std::vector<double> access_matrix(const std::vector<double>& rtt, std::size_t processes) {
  const std::size_t n = rtt.size();
  std::vector<double> m(processes * processes, 1.0);
  for (std::size_t a = 0; a < processes; ++a) {
    for (std::size_t b = 0; b < processes; ++b) {
      const bool sa = a < n;
      const bool sb = b < n;
      double v = 1.0;
      if (sa && sb) {
        v = (rtt[a] + rtt[b]) / 2.0;
      } else if (sa) {
        v = rtt[a] / 2.0;
      } else if (sb) {
        v = rtt[b] / 2.0;
      }
      m[a * processes + b] = v;
    }
  }
  return m;
}

}  // namespace detail

inline LatencySchedule build_schedule(const ExperimentConfig& cfg) {
  const std::size_t processes = static_cast<std::size_t>(cfg.servers + cfg.clients);
  LatencySchedule schedule(processes);
  const auto& lm = cfg.latency;
  switch (lm.kind) {
    case LatencyModel::Kind::Access:
      schedule.add_epoch(0, detail::access_matrix(lm.server_rtt_ms, processes));
      break;
    case LatencyModel::Kind::RandomAccess: {
      Rng rng(detail::stream_seed(cfg.seed, 2));
      for (Micros start = 0; start < cfg.duration; start += lm.delta) {
        std::vector<double> rtt(static_cast<std::size_t>(cfg.servers));
        for (auto& r : rtt) r = rng.uniform(lm.min_rtt_ms, lm.max_rtt_ms);
        schedule.add_epoch(start, detail::access_matrix(rtt, processes));
      }
      break;
    }
    case LatencyModel::Kind::Matrix:
      for (const auto& e : lm.epochs) {
        std::vector<double> flat;
        for (const auto& row : e.one_way_ms) flat.insert(flat.end(), row.begin(), row.end());
        schedule.add_epoch(e.start, std::move(flat));
      }
      break;
  }
  return schedule;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {
inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be an object", where));
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
  }
}

inline void read_ms(const nlohmann::json& j, const char* key, Micros& out) {
  double ms = to_ms(out);
  read_opt(j, key, ms);
  out = from_ms(ms);
}
}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read_ms;
  using detail::read_opt;
  detail::check_keys(j,
                     {"servers", "f", "epsilon", "clients", "read_ratio", "duration_ms", "warmup_ms", "mode",
                      "timers", "tau", "max_views", "restart", "latency", "jitter", "crashes", "seed",
                      "record_deliveries"},
                     "config");
  ExperimentConfig c;
  read_opt(j, "servers", c.servers);
  read_opt(j, "f", c.f);
  read_opt(j, "epsilon", c.epsilon);
  read_opt(j, "clients", c.clients);
  read_opt(j, "read_ratio", c.read_ratio);
  read_ms(j, "duration_ms", c.duration);
  read_ms(j, "warmup_ms", c.warmup);
  read_opt(j, "tau", c.protocol.tau);
  read_opt(j, "max_views", c.protocol.max_views);
  read_opt(j, "jitter", c.jitter);
  read_opt(j, "seed", c.seed);
  read_opt(j, "record_deliveries", c.record_deliveries);

  std::string mode = "weighted";
  read_opt(j, "mode", mode);
  if (mode == "weighted") {
    c.protocol.weighted = true;
  } else if (mode == "static") {
    c.protocol.weighted = false;
  } else {
    throw ConfigError("mode must be 'weighted' or 'static'");
  }

  std::string restart = "newer_view";
  read_opt(j, "restart", restart);
  if (restart == "newer_view") {
    c.protocol.restart = RestartPolicy::OnNewerView;
  } else if (restart == "any_mismatch") {
    c.protocol.restart = RestartPolicy::OnAnyMismatch;
  } else {
    throw ConfigError("restart must be 'newer_view' or 'any_mismatch'");
  }

  if (j.contains("timers")) {
    const auto& t = j.at("timers");
    detail::check_keys(t, {"view_timeout_ms", "propose_interval_ms", "ping_interval_ms", "resend_ms"}, "timers");
    read_ms(t, "view_timeout_ms", c.protocol.timers.view_timeout);
    read_ms(t, "propose_interval_ms", c.protocol.timers.propose_interval);
    read_ms(t, "ping_interval_ms", c.protocol.timers.ping_interval);
    read_ms(t, "resend_ms", c.protocol.timers.resend_interval);
  }

  if (j.contains("latency")) {
    const auto& l = j.at("latency");
    detail::check_keys(l, {"model", "server_rtt_ms", "min_rtt_ms", "max_rtt_ms", "delta_ms", "epochs"}, "latency");
    std::string model = "access";
    read_opt(l, "model", model);
    if (model == "access") {
      c.latency.kind = LatencyModel::Kind::Access;
      read_opt(l, "server_rtt_ms", c.latency.server_rtt_ms);
    } else if (model == "random_access") {
      c.latency.kind = LatencyModel::Kind::RandomAccess;
      read_opt(l, "min_rtt_ms", c.latency.min_rtt_ms);
      read_opt(l, "max_rtt_ms", c.latency.max_rtt_ms);
      read_ms(l, "delta_ms", c.latency.delta);
    } else if (model == "matrix") {
      c.latency.kind = LatencyModel::Kind::Matrix;
      if (!l.contains("epochs") || !l.at("epochs").is_array()) throw ConfigError("matrix latency needs 'epochs'");
      for (const auto& e : l.at("epochs")) {
        detail::check_keys(e, {"start_ms", "one_way_ms"}, "latency epoch");
        LatencyModel::Epoch epoch;
        read_ms(e, "start_ms", epoch.start);
        read_opt(e, "one_way_ms", epoch.one_way_ms);
        c.latency.epochs.push_back(std::move(epoch));
      }
    } else {
      throw ConfigError("latency model must be 'access', 'random_access' or 'matrix'");
    }
  } else if (static_cast<int>(c.latency.server_rtt_ms.size()) != c.servers) {
    throw ConfigError("no latency section and the default profile is for 5 servers");
  }

  if (j.contains("crashes")) {
    if (!j.at("crashes").is_array()) throw ConfigError("crashes must be an array");
    for (const auto& cr : j.at("crashes")) {
      detail::check_keys(cr, {"server", "at_ms"}, "crash");
      CrashSpec spec;
      read_opt(cr, "server", spec.server);
      read_ms(cr, "at_ms", spec.at);
      c.crashes.push_back(spec);
    }
  }
  c.validate();
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["servers"] = c.servers;
  j["f"] = c.f;
  j["epsilon"] = c.epsilon;
  j["clients"] = c.clients;
  j["read_ratio"] = c.read_ratio;
  j["duration_ms"] = to_ms(c.duration);
  j["warmup_ms"] = to_ms(c.warmup);
  j["mode"] = c.protocol.weighted ? "weighted" : "static";
  j["timers"] = {{"view_timeout_ms", to_ms(c.protocol.timers.view_timeout)},
                 {"propose_interval_ms", to_ms(c.protocol.timers.propose_interval)},
                 {"ping_interval_ms", to_ms(c.protocol.timers.ping_interval)},
                 {"resend_ms", to_ms(c.protocol.timers.resend_interval)}};
  j["tau"] = c.protocol.tau;
  j["max_views"] = c.protocol.max_views;
  j["restart"] = c.protocol.restart == RestartPolicy::OnNewerView ? "newer_view" : "any_mismatch";
  nlohmann::json l;
  switch (c.latency.kind) {
    case LatencyModel::Kind::Access:
      l = {{"model", "access"}, {"server_rtt_ms", c.latency.server_rtt_ms}};
      break;
    case LatencyModel::Kind::RandomAccess:
      l = {{"model", "random_access"},
           {"min_rtt_ms", c.latency.min_rtt_ms},
           {"max_rtt_ms", c.latency.max_rtt_ms},
           {"delta_ms", to_ms(c.latency.delta)}};
      break;
    case LatencyModel::Kind::Matrix: {
      l["model"] = "matrix";
      l["epochs"] = nlohmann::json::array();
      for (const auto& e : c.latency.epochs)
        l["epochs"].push_back({{"start_ms", to_ms(e.start)}, {"one_way_ms", e.one_way_ms}});
      break;
    }
  }
  j["latency"] = l;
  j["jitter"] = c.jitter;
  j["crashes"] = nlohmann::json::array();
  for (const auto& cr : c.crashes) j["crashes"].push_back({{"server", cr.server}, {"at_ms", to_ms(cr.at)}});
  j["seed"] = c.seed;
  j["record_deliveries"] = c.record_deliveries;
  return j;
}

// ---------------------------------------------------------------------------
// Metrics

struct OpRecord {
  ClientId client = 0;
  std::uint64_t op_id = 0;
  OpKind kind = OpKind::Read;
  Value value;
  Micros invoke = 0;
  std::optional<Micros> complete;
  Micros quorum_latency = 0;
  std::uint32_t view = 0;
  int restarts = 0;
};

struct PhaseRecord {
  ClientId client = 0;
  PhaseDone done;
};

struct InstallRecord {
  ServerId server = 0;
  std::uint32_t view = 0;
  Micros at = 0;
};

struct LatencyStats {
  std::size_t count = 0;
  double mean = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

/// Nearest-rank percentiles over millisecond samples.
inline LatencyStats latency_stats(std::vector<double> ms) {
  LatencyStats s;
  s.count = ms.size();
  if (ms.empty()) return s;
  std::sort(ms.begin(), ms.end());
  double sum = 0.0;
  for (double v : ms) sum += v;
  s.mean = sum / static_cast<double>(ms.size());
  auto rank = [&](double p) {
    auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(ms.size())));
    return ms[std::min(ms.size() - 1, idx == 0 ? 0 : idx - 1)];
  };
  s.p50 = rank(0.50);
  s.p95 = rank(0.95);
  s.p99 = rank(0.99);
  s.max = ms.back();
  return s;
}

struct MetricsReport {
  ExperimentConfig config;
  std::vector<OpRecord> ops;  ///< ordered by (invoke, client)
  std::vector<PhaseRecord> phases;
  std::vector<InstallRecord> installs;
  /// Frozen weight per view per server (servers that never froze a view
  /// are absent from that view's map).
  std::map<std::uint32_t, std::map<ServerId, double>> view_weights;
  LatencyStats quorum_latency;
  LatencyStats op_latency;
  LatencyStats post_convergence_quorum_latency;
  std::uint32_t last_view = 0;
  std::uint64_t messages_sent = 0;
  Trace trace;

  std::vector<HistoryEvent> history() const {
    std::vector<HistoryEvent> out;
    out.reserve(ops.size());
    for (const auto& op : ops)
      out.push_back(HistoryEvent{op.client, op.kind, op.value, op.invoke, op.complete, ViewId{op.view}});
    return out;
  }

  /// Operations invoked before `cutoff` that never completed.
  std::size_t incomplete_before(Micros cutoff) const {
    return static_cast<std::size_t>(std::count_if(
        ops.begin(), ops.end(), [&](const OpRecord& op) { return op.invoke < cutoff && !op.complete; }));
  }

  std::size_t completed() const {
    return static_cast<std::size_t>(
        std::count_if(ops.begin(), ops.end(), [](const OpRecord& op) { return op.complete.has_value(); }));
  }

  std::string csv() const {
    std::string out = "client,kind,invoke_ms,complete_ms,latency_ms,quorum_latency_ms,view,value\n";
    for (const auto& op : ops) {
      if (op.complete) {
        out += fmt::format("{},{},{:.3f},{:.3f},{:.3f},{:.3f},{},{}\n", op.client, op_name(op.kind), to_ms(op.invoke),
                           to_ms(*op.complete), to_ms(*op.complete - op.invoke), to_ms(op.quorum_latency), op.view,
                           op.value);
      } else {
        out += fmt::format("{},{},{:.3f},,,,,{}\n", op.client, op_name(op.kind), to_ms(op.invoke), op.value);
      }
    }
    return out;
  }

  nlohmann::json summary() const {
    auto stats = [](const LatencyStats& s) {
      return nlohmann::json{{"count", s.count}, {"mean_ms", s.mean}, {"p50_ms", s.p50},
                            {"p95_ms", s.p95},  {"p99_ms", s.p99},   {"max_ms", s.max}};
    };
    nlohmann::json j;
    j["config"] = config_to_json(config);
    j["operations"] = ops.size();
    j["completed"] = completed();
    j["incomplete"] = ops.size() - completed();
    j["quorum_latency"] = stats(quorum_latency);
    j["op_latency"] = stats(op_latency);
    j["post_convergence_quorum_latency"] = stats(post_convergence_quorum_latency);
    j["last_view"] = last_view;
    j["messages_sent"] = messages_sent;
    nlohmann::json timeline = nlohmann::json::array();
    std::map<std::uint32_t, Micros> first;
    for (const auto& in : installs)
      if (!first.contains(in.view)) first[in.view] = in.at;
    for (const auto& [v, at] : first) timeline.push_back({{"view", v}, {"installed_ms", to_ms(at)}});
    j["view_timeline"] = timeline;
    nlohmann::json weights = nlohmann::json::object();
    for (const auto& [v, ws] : view_weights) {
      nlohmann::json row = nlohmann::json::object();
      for (const auto& [s, w] : ws) row[std::to_string(s)] = w;
      weights[std::to_string(v)] = row;
    }
    j["view_weights"] = weights;
    return j;
  }
};

// ---------------------------------------------------------------------------
// Runner

namespace detail {

class ClusterHandler {
 public:
  ClusterHandler(Context& ctx, Trace& trace, std::vector<ServerProcess>& servers, std::vector<ClientProcess>& clients)
      : ctx_(ctx), trace_(trace), servers_(servers), clients_(clients) {}

  void on_message(const Envelope<Message>& env) {
    if (trace_.records_deliveries())
      ctx_.note("deliver", env.src, env.dst, summarize(env.payload));
    if (env.dst < servers_.size()) {
      servers_[env.dst].on_message(ctx_, env);
    } else {
      clients_[env.dst - servers_.size()].on_message(ctx_, env);
    }
  }

  void on_timer(ProcessId owner, TimerId, std::uint64_t tag) {
    if (owner < servers_.size()) {
      servers_[owner].on_timer(ctx_, tag);
    } else {
      clients_[owner - servers_.size()].on_timer(ctx_, tag);
    }
  }

  void on_crash(ProcessId p, Micros) { ctx_.note("crash", p, -1, ""); }

 private:
  Context& ctx_;
  Trace& trace_;
  std::vector<ServerProcess>& servers_;
  std::vector<ClientProcess>& clients_;
};

}  // namespace detail

/// Runs one deterministic simulation. The same config (including seed)
/// always yields the same report and trace.
inline MetricsReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SystemConfig sys = cfg.system();

  CrashPlan plan;
  for (const auto& c : cfg.crashes) plan.crashes.emplace_back(c.server, c.at);
  Network<Message> net(build_schedule(cfg), plan, cfg.jitter, detail::stream_seed(cfg.seed, 1));

  MetricsReport report;
  report.config = cfg;
  report.trace = Trace(cfg.record_deliveries);
  Context ctx(net, report.trace, static_cast<std::size_t>(cfg.servers));
  ctx.note("config", 0, -1,
           fmt::format("n={} f={} epsilon={:.6g} clients={} mode={} seed={} duration={:.3f}", cfg.servers, cfg.f,
                       cfg.epsilon, cfg.clients, cfg.protocol.weighted ? "weighted" : "static", cfg.seed,
                       to_ms(cfg.duration)));

  std::vector<ServerProcess> servers;
  for (int s = 0; s < cfg.servers; ++s) servers.emplace_back(static_cast<ServerId>(s), sys, cfg.protocol);
  std::vector<ClientProcess> clients;
  for (int c = 0; c < cfg.clients; ++c) {
    clients.emplace_back(static_cast<ProcessId>(cfg.servers + c), static_cast<ClientId>(c + 1), sys, cfg.protocol,
                         cfg.read_ratio, detail::stream_seed(cfg.seed, 100 + static_cast<std::uint64_t>(c)));
  }

  for (auto& s : servers) s.start(ctx);
  for (auto& c : clients) c.start(ctx);
  detail::ClusterHandler handler(ctx, report.trace, servers, clients);
  net.run(cfg.duration, handler);
  for (const auto& s : servers) s.dump_weights(ctx);

  // Collect.
  std::vector<double> quorum_ms;
  std::vector<double> op_ms;
  std::vector<double> post_ms;
  for (const auto& c : clients) {
    for (const auto& d : c.completed()) {
      report.ops.push_back(OpRecord{c.cid(), d.op_id, d.kind, d.value, d.invoked_at, d.completed_at,
                                    d.quorum_latency, d.view.index, d.restarts});
      quorum_ms.push_back(to_ms(d.quorum_latency));
      op_ms.push_back(to_ms(d.completed_at - d.invoked_at));
      if (d.invoked_at >= cfg.warmup) post_ms.push_back(to_ms(d.quorum_latency));
    }
    if (const auto& op = c.state().op) {
      report.ops.push_back(OpRecord{c.cid(), op->op_id, op->kind,
                                    op->kind == OpKind::Write ? op->write_value : Value{}, op->invoked_at,
                                    std::nullopt, 0, c.state().cview.index, op->restarts});
    }
    for (const auto& p : c.phases()) report.phases.push_back(PhaseRecord{c.cid(), p});
  }
  std::sort(report.ops.begin(), report.ops.end(), [](const OpRecord& a, const OpRecord& b) {
    return std::tie(a.invoke, a.client) < std::tie(b.invoke, b.client);
  });
  report.quorum_latency = latency_stats(std::move(quorum_ms));
  report.op_latency = latency_stats(std::move(op_ms));
  report.post_convergence_quorum_latency = latency_stats(std::move(post_ms));

  for (const auto& r : report.trace.records()) {
    if (r.event != "install") continue;
    Fields f(r.detail);
    auto view = static_cast<std::uint32_t>(f.integer("view"));
    report.installs.push_back(InstallRecord{static_cast<ServerId>(r.src), view, r.time});
    report.last_view = std::max(report.last_view, view);
  }
  for (const auto& s : servers)
    for (const auto& [v, w] : s.frozen_weights()) report.view_weights[v][s.id()] = w;
  report.messages_sent = net.messages_sent();
  return report;
}

}  // namespace wabd
