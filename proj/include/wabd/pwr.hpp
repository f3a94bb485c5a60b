#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <tuple>

#include "wabd/messages.hpp"
#include "wabd/monitor.hpp"
#include "wabd/quorum.hpp"
#include "wabd/views.hpp"

namespace wabd {

/// One pairwise weight reassignment: `delta` is +epsilon on the receiver's
/// books and -epsilon on the sender's.
struct PwrRecord {
  ServerId receiver = 0;
  ServerId sender = 0;
  ViewId view;
  double delta = 0.0;

  friend auto operator<=>(const PwrRecord&, const PwrRecord&) = default;
};

struct PwrState {
  ServerId owner = 0;
  double epsilon = 0.1;
  std::set<PwrRecord> pwrs;
  std::set<PwrRecord> pwr_requests;  ///< outgoing proposals awaiting accept_pwr

  PwrState() = default;
  PwrState(ServerId owner_, double epsilon_) : owner(owner_), epsilon(epsilon_) {}
};

namespace detail {

/// Deltas are whole multiples of epsilon; summing the multiples and scaling
/// once keeps weight values reproducible regardless of record order.
inline long epsilon_units(const std::set<PwrRecord>& records, ViewId view, double epsilon) {
  long units = 0;
  for (const auto& r : records)
    if (r.view == view) units += std::lround(r.delta / epsilon);
  return units;
}

inline bool has_transfer(const PwrState& st, ServerId target, ViewId view) {
  for (const auto& r : st.pwr_requests)
    if (r.view == view && r.sender == target) return true;
  for (const auto& r : st.pwrs)
    if (r.view == view && r.receiver == st.owner && r.sender == target) return true;
  return false;
}

}  // namespace detail

inline double get_weight(const PwrState& st, ViewId view) {
  return 1.0 + static_cast<double>(detail::epsilon_units(st.pwrs, view, st.epsilon)) * st.epsilon;
}

inline double get_requested_weight(const PwrState& st, ViewId view) {
  return static_cast<double>(detail::epsilon_units(st.pwr_requests, view, st.epsilon)) * st.epsilon;
}

struct Proposal {
  ServerId target = 0;
  ProposePwr message;
};

/// Receiver side: asks the slowest qualifying peer for epsilon weight in
/// the succeeding view. Runs to completion as one atomic step of the owner.
inline std::optional<Proposal> try_propose(PwrState& st, ViewId cview, const std::set<ViewId>& dirty,
                                           const LatencyScoreTable& table, const SystemConfig& config,
                                           double tau = 0.0) {
  const ViewId next = succ(cview);
  if (dirty.contains(next)) return std::nullopt;  // C2R

  const long units = detail::epsilon_units(st.pwrs, next, st.epsilon) +
                     detail::epsilon_units(st.pwr_requests, next, st.epsilon) + 1;
  if (!strictly_less(1.0 + static_cast<double>(units) * st.epsilon, config.wu)) return std::nullopt;  // C4R

  for (ServerId target : slower_peers(table)) {  // C3R, slowest first
    if (!exceeds_threshold(table, target, tau)) continue;
    if (detail::has_transfer(st, target, next)) continue;
    st.pwr_requests.insert(PwrRecord{st.owner, target, next, st.epsilon});
    return Proposal{target, ProposePwr{next, st.epsilon}};
  }
  return std::nullopt;
}

/// Sender side. Refusal is silent.
inline std::optional<AcceptPwr> handle_propose(PwrState& st, ServerId from, const ProposePwr& msg, ViewId cview,
                                               const std::set<ViewId>& dirty, const LatencyScoreTable& table,
                                               const SystemConfig& config) {
  if (!(succ(cview) <= msg.view)) return std::nullopt;  // C1S
  if (dirty.contains(msg.view)) return std::nullopt;    // C2S
  auto self = table.self_score();
  auto proposer = table.score(from);
  if (!self || !proposer || !(*proposer < *self)) return std::nullopt;  // C3S
  // C4S against the weight of the view being transferred.
  if (!strictly_less(config.wl, get_weight(st, msg.view) - st.epsilon)) return std::nullopt;
  st.pwrs.insert(PwrRecord{from, st.owner, msg.view, -st.epsilon});
  return AcceptPwr{msg.view, st.epsilon};
}

/// Receiver side completion. Returns true when the increment was recorded;
/// an accept that arrives after the owner began installing the view is
/// dropped, and that epsilon is lost for the view.
inline bool handle_accept(PwrState& st, ServerId from, const AcceptPwr& msg, ViewId cview,
                          const std::set<ViewId>& dirty) {
  st.pwr_requests.erase(PwrRecord{st.owner, from, msg.view, st.epsilon});
  if (succ(cview) != msg.view) return false;  // C1R
  if (dirty.contains(msg.view)) return false;
  st.pwrs.insert(PwrRecord{st.owner, from, msg.view, st.epsilon});
  return true;
}

/// Drops pending proposals for views the owner has already reached.
inline void collect_stale_requests(PwrState& st, ViewId cview) {
  std::erase_if(st.pwr_requests, [&](const PwrRecord& r) { return r.view <= cview; });
}

}  // namespace wabd
