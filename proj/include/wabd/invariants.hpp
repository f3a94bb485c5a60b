#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "wabd/linearizability.hpp"
#include "wabd/quorum.hpp"
#include "wabd/trace.hpp"

namespace wabd {

struct InvariantFailure {
  std::size_t position = 0;  ///< index of the offending trace record
  std::string check;         ///< short name of the violated property
  std::string what;
};

struct InvariantReport {
  std::vector<InvariantFailure> failures;
  std::size_t installs = 0;
  std::size_t phases_checked = 0;
  std::uint32_t last_view = 0;
  /// Phases whose client saw the quorum after some server had already
  /// installed the next view. Informational: the quorum's responses were
  /// all sent while the phase's view was the last installed one.
  std::size_t lagging_completions = 0;

  bool ok() const noexcept { return failures.empty(); }
};

/// Reads n, f and epsilon from the trace's `config` record.
inline std::optional<SystemConfig> config_from_trace(const Trace& trace) {
  for (const auto& r : trace.records()) {
    if (r.event != "config") continue;
    Fields f(r.detail);
    return make_config(static_cast<int>(f.integer("n")), static_cast<int>(f.integer("f")), f.num("epsilon"));
  }
  return std::nullopt;
}

/// Checks a simulation trace against the protocol's safety properties:
///  - each server installs views 1, 2, 3, ... in order, each once
///    (so every server's sequence is a prefix of one common sequence);
///  - every install gathered state updates of weight > n/2;
///  - every server's weight for a view lies strictly inside (wl, wu), and
///    the weights of each installed view sum to at most n;
///  - a server's frozen weight for a view never changes afterwards;
///  - every completed phase ran in the view that was the last installed
///    one when its quorum answered, and never in a view not yet installed.
inline InvariantReport check_protocol_invariants(const Trace& trace, const SystemConfig& config) {
  InvariantReport report;
  const auto& records = trace.records();
  auto fail = [&](std::size_t pos, const char* check, std::string what) {
    report.failures.push_back(InvariantFailure{pos, check, std::move(what)});
  };

  // Installed-view timeline: time at which each index was first installed.
  std::map<std::int64_t, std::uint32_t> server_last;
  std::map<std::uint32_t, Micros> first_install;
  std::map<std::pair<std::int64_t, std::uint32_t>, std::pair<double, std::size_t>> frozen;
  std::map<std::pair<std::int64_t, std::uint32_t>, std::pair<double, std::size_t>> final_books;
  std::vector<std::size_t> phases;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    try {
      if (r.event == "install") {
        Fields f(r.detail);
        const auto view = static_cast<std::uint32_t>(f.integer("view"));
        ++report.installs;
        const std::uint32_t prev = server_last.contains(r.src) ? server_last[r.src] : 0;
        if (view != prev + 1) {
          fail(i, "single-view",
               fmt::format("server {} installed view {} after view {}", r.src, view, prev));
        } else {
          server_last[r.src] = view;
        }
        if (!first_install.contains(view)) first_install[view] = r.time;
        report.last_view = std::max(report.last_view, view);
        const double q = f.num("quorum");
        if (!is_weighted_quorum(q, config))
          fail(i, "install-quorum", fmt::format("view {} installed with state-update weight {}", view, q));
      } else if (r.event == "weight" || r.event == "vweight") {
        Fields f(r.detail);
        const auto view = static_cast<std::uint32_t>(f.integer("view"));
        const double w = f.num("w");
        if (!(strictly_less(config.wl, w) && strictly_less(w, config.wu)))
          fail(i, "weight-bounds",
               fmt::format("server {} has weight {} in view {} outside ({}, {})", r.src, w, view, config.wl,
                           config.wu));
        auto key = std::make_pair(r.src, view);
        if (r.event == "weight") {
          if (auto it = frozen.find(key); it != frozen.end() && it->second.first != w)
            fail(i, "frozen-weight", fmt::format("server {} froze view {} twice with different weights", r.src, view));
          frozen[key] = {w, i};
        } else {
          final_books[key] = {w, i};
        }
      } else if (r.event == "phase") {
        phases.push_back(i);
      }
    } catch (const TraceError& e) {
      fail(i, "parse", e.what());
    }
  }

  for (const auto& [key, books] : final_books) {
    auto it = frozen.find(key);
    if (it != frozen.end() && it->second.first != books.first)
      fail(books.second, "frozen-weight",
           fmt::format("server {} weight for view {} changed after it was frozen", key.first, key.second));
  }

  // Total-weight bound over every installed view. A server without any record for
  // the view holds the default weight 1.
  for (const auto& [view, at] : first_install) {
    double total = 0.0;
    std::size_t pos = 0;
    for (int s = 0; s < config.n; ++s) {
      auto key = std::make_pair(static_cast<std::int64_t>(s), view);
      if (auto it = frozen.find(key); it != frozen.end()) {
        total += it->second.first;
        pos = std::max(pos, it->second.second);
      } else if (auto jt = final_books.find(key); jt != final_books.end()) {
        total += jt->second.first;
        pos = std::max(pos, jt->second.second);
      } else {
        total += 1.0;
      }
    }
    if (strictly_less(static_cast<double>(config.n), total))
      fail(pos, "weight-total", fmt::format("weights of view {} sum to {} > n = {}", view, total, config.n));
  }

  auto last_installed_at = [&](Micros t) -> std::uint32_t {
    std::uint32_t last = 0;
    for (const auto& [view, at] : first_install) {
      if (at > t) break;
      last = view;
    }
    return last;
  };

  for (std::size_t i : phases) {
    const auto& r = records[i];
    try {
      Fields f(r.detail);
      const auto view = static_cast<std::uint32_t>(f.integer("view"));
      const Micros first = f.time("first");
      ++report.phases_checked;
      const std::uint32_t at_quorum = last_installed_at(first);
      const std::uint32_t at_completion = last_installed_at(r.time);
      if (view > at_completion) {
        fail(i, "last-view", fmt::format("phase completed in view {} before it was installed", view));
      } else if (view != at_quorum) {
        fail(i, "last-view",
             fmt::format("phase completed in view {} but view {} was installed when its quorum answered", view,
                         at_quorum));
      } else if (view != at_completion) {
        ++report.lagging_completions;
      }
    } catch (const TraceError& e) {
      fail(i, "parse", e.what());
    }
  }
  return report;
}

/// Same, taking n, f and epsilon from the trace's `config` record.
inline InvariantReport check_protocol_invariants(const Trace& trace) {
  auto config = config_from_trace(trace);
  if (!config) {
    InvariantReport report;
    report.failures.push_back(InvariantFailure{0, "parse", "trace has no config record"});
    return report;
  }
  return check_protocol_invariants(trace, *config);
}

/// Rebuilds the client operation history from `invoke` / `complete`
/// records. Operations without a completion stay pending.
inline std::vector<HistoryEvent> history_from_trace(const Trace& trace) {
  std::vector<HistoryEvent> out;
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> open;
  for (const auto& r : trace.records()) {
    if (r.event != "invoke" && r.event != "complete") continue;
    Fields f(r.detail);
    auto key = std::make_pair(f.integer("client"), f.integer("op"));
    if (r.event == "invoke") {
      HistoryEvent ev;
      ev.client = static_cast<ClientId>(key.first);
      ev.kind = f.str("kind") == "write" ? OpKind::Write : OpKind::Read;
      if (ev.kind == OpKind::Write) ev.value = f.str("value");
      ev.invoke = r.time;
      open[key] = out.size();
      out.push_back(std::move(ev));
    } else {
      auto it = open.find(key);
      if (it == open.end()) throw TraceError(fmt::format("completion of unknown operation {}/{}", key.first, key.second));
      HistoryEvent& ev = out[it->second];
      const std::string& v = f.str("value");
      ev.value = v == "-" ? Value{} : v;
      ev.complete = r.time;
      ev.view = ViewId{static_cast<std::uint32_t>(f.integer("view"))};
      open.erase(it);
    }
  }
  return out;
}

}  // namespace wabd
