#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "wabd/types.hpp"

namespace wabd {

inline constexpr double kScoreAlpha = 0.2;
inline constexpr double kSelfScoreFloorMs = 1.0;

/// Per-server latency scores of peers (smoothed server-to-server RTT, ms).
///
/// The owner's own entry is derived, not measured: peers piggyback their
/// RTT tables on pongs, and the owner triangulates the round trip "to
/// itself" as mean(rtt(o,j) + rtt(o,k) - rtt(j,k)) over peer pairs. With
/// additive link latencies this puts the self-score on the same scale as
/// the peer scores, so `self < scores[p]` holds exactly when p is slower.
struct LatencyScoreTable {
  ServerId owner = 0;
  std::map<ServerId, double> scores;
  /// Latest RTT table reported by each peer.
  std::map<ServerId, std::map<ServerId, double>> peer_tables;
  double alpha = kScoreAlpha;

  std::optional<double> score(ServerId s) const {
    auto it = scores.find(s);
    if (it == scores.end()) return std::nullopt;
    return it->second;
  }
  std::optional<double> self_score() const { return score(owner); }

  /// Peer RTTs only (what gets gossiped).
  std::map<ServerId, double> peer_scores() const {
    std::map<ServerId, double> out;
    for (const auto& [s, v] : scores)
      if (s != owner) out.emplace(s, v);
    return out;
  }
};

namespace detail {

inline void refresh_self_score(LatencyScoreTable& table) {
  std::vector<std::pair<ServerId, double>> peers;
  for (const auto& [s, v] : table.scores)
    if (s != table.owner) peers.emplace_back(s, v);

  auto reported = [&](ServerId a, ServerId b) -> std::optional<double> {
    double sum = 0.0;
    int count = 0;
    if (auto it = table.peer_tables.find(a); it != table.peer_tables.end()) {
      if (auto jt = it->second.find(b); jt != it->second.end()) {
        sum += jt->second;
        ++count;
      }
    }
    if (auto it = table.peer_tables.find(b); it != table.peer_tables.end()) {
      if (auto jt = it->second.find(a); jt != it->second.end()) {
        sum += jt->second;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
  };

  double total = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a < peers.size(); ++a) {
    for (std::size_t b = a + 1; b < peers.size(); ++b) {
      auto between = reported(peers[a].first, peers[b].first);
      if (!between) continue;
      total += peers[a].second + peers[b].second - *between;
      ++pairs;
    }
  }
  if (pairs == 0) return;
  table.scores[table.owner] = std::max(kSelfScoreFloorMs, total / pairs);
}

}  // namespace detail

/// EWMA update of one peer's score; the first sample initializes it.
inline void record_rtt(LatencyScoreTable& table, ServerId peer, double rtt_ms) {
  if (peer == table.owner) return;
  rtt_ms = std::max(0.0, rtt_ms);
  auto [it, inserted] = table.scores.try_emplace(peer, rtt_ms);
  if (!inserted) it->second = table.alpha * rtt_ms + (1.0 - table.alpha) * it->second;
  detail::refresh_self_score(table);
}

/// Stores the RTT table a peer reported about its own peers.
inline void record_peer_table(LatencyScoreTable& table, ServerId peer,
                              std::map<ServerId, double> reported) {
  if (peer == table.owner) return;
  table.peer_tables[peer] = std::move(reported);
  detail::refresh_self_score(table);
}

/// Peers scored strictly worse than the owner, slowest first.
inline std::vector<ServerId> slower_peers(const LatencyScoreTable& table) {
  std::vector<ServerId> out;
  auto self = table.self_score();
  if (!self) return out;
  for (const auto& [s, v] : table.scores)
    if (s != table.owner && *self < v) out.push_back(s);
  std::stable_sort(out.begin(), out.end(), [&](ServerId a, ServerId b) {
    return table.scores.at(a) > table.scores.at(b);
  });
  return out;
}

/// Threshold rule for seeking a transfer from `target`: the pair's score
/// shares must differ by more than `tau`, i.e.
/// self/(self+t) + tau < t/(self+t). Keeps near-equal servers from trading
/// weight back and forth.
inline bool exceeds_threshold(const LatencyScoreTable& table, ServerId target, double tau) {
  auto self = table.self_score();
  auto other = table.score(target);
  if (!self || !other) return false;
  double total = *self + *other;
  if (total <= 0.0) return false;
  return *self / total + tau < *other / total;
}

}  // namespace wabd
