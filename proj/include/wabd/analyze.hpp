#pragma once

#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "wabd/analysis.hpp"

namespace wabd::analysis {

/// A quorum-spec file: nodes with optional capacity / weight / client RTT,
/// and the quorum systems to evaluate over them.
///
///   {"nodes": [{"name": "p1", "capacity": 1000, "weight": 1.4, "rtt_ms": 20}, ...],
///    "systems": [{"name": "SMQS", "kind": "majority"},
///                {"name": "WMQS", "kind": "weighted"},
///                {"name": "listed", "quorums": [["p1", "p2"], ...]}],
///    "read_fraction": 1}
struct SystemSpec {
  std::string name;
  enum class Kind { Majority, Weighted, Explicit } kind = Kind::Majority;
  std::vector<std::vector<std::string>> quorums;  ///< Explicit only
};

struct AnalysisSpec {
  std::vector<Node> nodes;
  std::optional<std::vector<double>> rtts_ms;
  bool has_capacities = false;
  std::vector<SystemSpec> systems;
  double read_fraction = 1.0;
};

struct SystemReport {
  std::string name;
  QuorumSystem system;      ///< as specified
  QuorumSystem minimal;     ///< dominated quorums removed
  std::optional<double> latency_ms;
  std::optional<double> capacity;
};

inline AnalysisSpec analysis_spec_from_json(const nlohmann::json& j) {
  auto bad = [](const std::string& what) { return std::invalid_argument("quorum spec: " + what); };
  if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array()) throw bad("needs a 'nodes' array");
  AnalysisSpec spec;
  std::size_t with_rtt = 0;
  std::size_t with_capacity = 0;
  for (const auto& n : j.at("nodes")) {
    Node node;
    node.name = n.value("name", fmt::format("p{}", spec.nodes.size() + 1));
    node.weight = n.value("weight", 1.0);
    if (n.contains("capacity")) {
      node.capacity = n.at("capacity").get<double>();
      ++with_capacity;
    }
    if (n.contains("rtt_ms")) {
      if (!spec.rtts_ms) spec.rtts_ms.emplace();
      spec.rtts_ms->push_back(n.at("rtt_ms").get<double>());
      ++with_rtt;
    }
    spec.nodes.push_back(std::move(node));
  }
  if (spec.nodes.empty() || spec.nodes.size() > kMaxNodes) throw bad(fmt::format("needs 1..{} nodes", kMaxNodes));
  if (with_rtt != 0 && with_rtt != spec.nodes.size()) throw bad("give rtt_ms for all nodes or none");
  if (with_capacity != 0 && with_capacity != spec.nodes.size()) throw bad("give capacity for all nodes or none");
  spec.has_capacities = with_capacity != 0;
  spec.read_fraction = j.value("read_fraction", 1.0);

  if (!j.contains("systems")) {
    spec.systems = {{"SMQS", SystemSpec::Kind::Majority, {}}, {"WMQS", SystemSpec::Kind::Weighted, {}}};
    return spec;
  }
  for (const auto& s : j.at("systems")) {
    SystemSpec sys;
    sys.name = s.value("name", fmt::format("system{}", spec.systems.size() + 1));
    if (s.contains("quorums")) {
      sys.kind = SystemSpec::Kind::Explicit;
      sys.quorums = s.at("quorums").get<std::vector<std::vector<std::string>>>();
    } else {
      const std::string kind = s.value("kind", "majority");
      if (kind == "majority") {
        sys.kind = SystemSpec::Kind::Majority;
      } else if (kind == "weighted") {
        sys.kind = SystemSpec::Kind::Weighted;
      } else {
        throw bad("system kind must be 'majority' or 'weighted', or give 'quorums'");
      }
    }
    spec.systems.push_back(std::move(sys));
  }
  return spec;
}

inline QuorumSystem build_system(const AnalysisSpec& spec, const SystemSpec& sys) {
  switch (sys.kind) {
    case SystemSpec::Kind::Majority:
      return smqs(spec.nodes);
    case SystemSpec::Kind::Weighted:
      return wmqs(spec.nodes);
    case SystemSpec::Kind::Explicit: {
      QuorumSystem qs{spec.nodes, {}};
      for (const auto& names : sys.quorums) {
        QuorumMask q = 0;
        for (const auto& name : names) q |= QuorumMask{1} << qs.index_of(name);
        if (q == 0) throw std::invalid_argument("empty quorum in '" + sys.name + "'");
        qs.quorums.push_back(q);
      }
      return qs;
    }
  }
  throw std::logic_error("unreachable");
}

inline std::vector<SystemReport> analyze(const AnalysisSpec& spec) {
  std::vector<SystemReport> out;
  for (const auto& sys : spec.systems) {
    SystemReport r;
    r.name = sys.name;
    r.system = build_system(spec, sys);
    r.minimal = QuorumSystem{r.system.nodes, minimalize(r.system.quorums)};
    if (spec.rtts_ms) r.latency_ms = quorum_latency(r.system, *spec.rtts_ms);
    if (spec.has_capacities) r.capacity = capacity(r.system, spec.read_fraction);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string quorum_text(const QuorumSystem& qs, QuorumMask q) {
  std::string out;
  for (const auto& name : qs.names(q)) out += name;
  return out;
}

inline nlohmann::json report_to_json(const SystemReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  std::vector<std::string> quorums;
  for (QuorumMask q : r.system.quorums) quorums.push_back(quorum_text(r.system, q));
  std::vector<std::string> minimal;
  for (QuorumMask q : r.minimal.quorums) minimal.push_back(quorum_text(r.minimal, q));
  j["quorums"] = quorums;
  j["minimal_quorums"] = minimal;
  j["intersecting"] = intersecting(r.system.quorums);
  j["latency_ms"] = r.latency_ms ? nlohmann::json(*r.latency_ms) : nlohmann::json(nullptr);
  j["capacity"] = r.capacity ? nlohmann::json(*r.capacity) : nlohmann::json(nullptr);
  return j;
}

}  // namespace wabd::analysis
