#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "wabd/abd.hpp"
#include "wabd/messages.hpp"
#include "wabd/quorum.hpp"
#include "wabd/views.hpp"

namespace wabd {

class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct StateUpdateRecord {
  ServerId sender = 0;
  Value value;
  std::uint64_t ts = 0;
  ClientId cid = 0;
  ViewId view;
  double weight = 0.0;

  friend auto operator<=>(const StateUpdateRecord&, const StateUpdateRecord&) = default;
};

struct ViewChangerState {
  ServerId owner = 0;
  ViewId cview = kInitialView;
  std::set<ViewId> rchange_views;
  std::set<ViewId> schange_views;
  std::set<StateUpdateRecord> state_updates;
  std::set<ViewId> dirty_views{kInitialView};
  bool rw_enabled = true;
  bool changing = false;  ///< between S2 and S6 of the change out of cview

  ViewChangerState() = default;
  explicit ViewChangerState(ServerId owner_) : owner(owner_) {}

  double sum_weights(ViewId view) const {
    double total = 0.0;
    for (const auto& r : state_updates)
      if (r.view == view) total += r.weight;
    return total;
  }
};

/// Timer for cview expired: ask everyone to move to the next view.
inline std::vector<Message> on_view_timeout(ViewChangerState& st) {
  const ViewId next = succ(st.cview);
  st.rchange_views.insert(next);
  if (st.schange_views.contains(next)) return {};
  st.schange_views.insert(next);
  return {ChangeView{next}};
}

inline void handle_change_view(ViewChangerState& st, const ChangeView& msg) { st.rchange_views.insert(msg.view); }

inline bool change_requested(const ViewChangerState& st) {
  return !st.changing && st.rchange_views.contains(succ(st.cview));
}

/// Steps S1-S4: relay, disable r/w, mark the next view dirty, then publish
/// the local register under the current view with this server's weight
/// for it. `cview_weight` is get_weight(cview) from the pwr module.
inline std::vector<Message> maybe_start_change(ViewChangerState& st, const RegisterState& reg,
                                               double cview_weight) {
  std::vector<Message> out;
  if (!change_requested(st)) return out;
  const ViewId next = succ(st.cview);
  if (!st.schange_views.contains(next)) {
    st.schange_views.insert(next);
    out.emplace_back(ChangeView{next});
  }
  st.rw_enabled = false;
  st.changing = true;
  st.dirty_views.insert(next);
  StateUpdateRecord own{st.owner, reg.val, reg.ts, reg.cid, st.cview, cview_weight};
  st.state_updates.insert(own);
  out.emplace_back(StateUpdate{own.value, own.ts, own.cid, own.view, own.weight});
  return out;
}

inline void handle_state_update(ViewChangerState& st, ServerId from, const StateUpdate& msg) {
  if (msg.view.index + 1 < st.cview.index) return;  // older than cview-1: never counted again
  st.state_updates.insert(StateUpdateRecord{from, msg.value, msg.ts, msg.cid, msg.view, msg.weight});
}

struct InstallResult {
  ViewId from;
  ViewId to;
  double quorum_weight = 0.0;
  std::size_t contributors = 0;
  std::uint64_t ts = 0;
  ClientId cid = 0;
};

/// Merged register state: max ts, then max cid among those; the value of
/// that (ts, cid) pair must be unique.
inline RegisterState merge_state_updates(const std::set<StateUpdateRecord>& records, ViewId view) {
  std::optional<RegisterState> best;
  for (const auto& r : records) {
    if (r.view != view) continue;
    if (!best || std::tie(best->ts, best->cid) < std::tie(r.ts, r.cid)) {
      best = RegisterState{r.ts, r.cid, r.value};
    } else if (best->ts == r.ts && best->cid == r.cid && best->val != r.value) {
      throw ProtocolError("two values share the same (ts, cid) in view state updates");
    }
  }
  if (!best) throw ProtocolError("no state updates for view");
  return *best;
}

/// Steps S4 (wait + merge), S5 and S6. Returns the install when the state
/// updates for cview carry a weighted majority.
inline std::optional<InstallResult> try_install(ViewChangerState& st, RegisterState& reg,
                                                const SystemConfig& config) {
  if (!st.changing) return std::nullopt;
  const double total = st.sum_weights(st.cview);
  if (!is_weighted_quorum(total, config)) return std::nullopt;

  std::size_t contributors = 0;
  for (const auto& r : st.state_updates)
    if (r.view == st.cview) ++contributors;
  reg = merge_state_updates(st.state_updates, st.cview);

  InstallResult result{st.cview, succ(st.cview), total, contributors, reg.ts, reg.cid};
  st.cview = succ(st.cview);
  st.changing = false;
  st.rw_enabled = true;
  std::erase_if(st.state_updates, [&](const StateUpdateRecord& r) { return r.view.index + 1 < st.cview.index; });
  return result;
}

}  // namespace wabd
