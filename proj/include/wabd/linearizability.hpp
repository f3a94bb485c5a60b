#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wabd/abd.hpp"
#include "wabd/types.hpp"
#include "wabd/views.hpp"

namespace wabd {

/// One client operation. `complete` is empty for operations still in flight
/// when the history was cut.
struct HistoryEvent {
  ClientId client = 0;
  OpKind kind = OpKind::Read;
  Value value;  ///< value written, or value returned by the read
  Micros invoke = 0;
  std::optional<Micros> complete;
  ViewId view;
};

struct LinearizabilityResult {
  bool ok = true;
  /// Indices into the input history of two operations that cannot be ordered.
  std::optional<std::pair<std::size_t, std::size_t>> witness;
  std::string reason;

  explicit operator bool() const noexcept { return ok; }
};

/// Decides whether a register history is linearizable.
///
/// Every written value must be unique (clients tag values with their id and
/// a counter), so each read maps to the write it observed. Each value then
/// forms a cluster {write, reads of it}; with f = min completion and
/// s = max invocation over the cluster, the cluster has a forward zone
/// (f, s) if f < s and a backward zone (s, f) otherwise. The history is
/// linearizable iff no read precedes its write, no two forward zones
/// overlap, and no backward zone lies inside a forward zone.
///
/// Operation a precedes b iff a.complete < b.invoke. Pending reads are
/// dropped; a pending write is kept (completing at +inf) only if some read
/// returned its value.
inline LinearizabilityResult check_linearizability(const std::vector<HistoryEvent>& history) {
  constexpr Micros kNegInf = std::numeric_limits<Micros>::min();
  constexpr Micros kPosInf = std::numeric_limits<Micros>::max();
  constexpr std::size_t kInitial = std::numeric_limits<std::size_t>::max();

  struct Cluster {
    std::size_t write = kInitial;
    Micros write_invoke = kNegInf;
    Micros write_complete = kNegInf;
    std::vector<std::size_t> reads;
    Micros min_finish = kPosInf;
    Micros max_start = kNegInf;
    std::size_t finish_op = kInitial;
    std::size_t start_op = kInitial;
  };

  LinearizabilityResult result;
  auto fail = [&](std::size_t a, std::size_t b, std::string why) {
    result.ok = false;
    result.witness = std::make_pair(a, b);
    result.reason = std::move(why);
    return result;
  };

  std::map<Value, Cluster> clusters;
  clusters[Value{}];  // initial value, written "at -inf"

  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& op = history[i];
    if (op.kind != OpKind::Write) continue;
    if (op.value.empty()) return fail(i, i, "write of the initial value");
    auto [it, inserted] = clusters.try_emplace(op.value);
    if (!inserted && it->second.write != kInitial) return fail(it->second.write, i, "value written twice");
    it->second.write = i;
    it->second.write_invoke = op.invoke;
    it->second.write_complete = op.complete.value_or(kPosInf);
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& op = history[i];
    if (op.kind != OpKind::Read || !op.complete) continue;
    auto it = clusters.find(op.value);
    if (it == clusters.end()) return fail(i, i, "read returned a value that was never written");
    Cluster& c = it->second;
    if (!op.value.empty() && *op.complete < c.write_invoke)
      return fail(i, c.write, "read completed before its write was invoked");
    c.reads.push_back(i);
  }

  struct Zone {
    Micros low;
    Micros high;
    bool forward;
    std::size_t start_op;  ///< op with the latest invocation in the cluster
    std::size_t write;
  };
  std::vector<Zone> zones;
  for (auto& [value, c] : clusters) {
    const bool pending_write = c.write != kInitial && !history[c.write].complete;
    if (pending_write && c.reads.empty()) continue;  // never took visible effect
    if (value.empty() && c.reads.empty()) continue;

    auto consider = [&](std::size_t idx, Micros start, Micros finish) {
      if (finish < c.min_finish) {
        c.min_finish = finish;
        c.finish_op = idx;
      }
      if (start > c.max_start || c.start_op == kInitial) {
        c.max_start = start;
        c.start_op = idx;
      }
    };
    consider(c.write, c.write_invoke, c.write_complete);
    for (std::size_t r : c.reads) consider(r, history[r].invoke, *history[r].complete);

    if (c.min_finish < c.max_start) {
      zones.push_back(Zone{c.min_finish, c.max_start, true, c.start_op, c.write});
    } else {
      zones.push_back(Zone{c.max_start, c.min_finish, false, c.start_op, c.write});
    }
  }

  // Forward zones must be pairwise disjoint: sorted by low end, each must
  // end before the next begins.
  std::vector<const Zone*> forward;
  for (const auto& z : zones)
    if (z.forward) forward.push_back(&z);
  std::sort(forward.begin(), forward.end(), [](const Zone* a, const Zone* b) {
    return std::tie(a->low, a->high) < std::tie(b->low, b->high);
  });
  for (std::size_t i = 1; i < forward.size(); ++i) {
    if (forward[i]->low < forward[i - 1]->high) {
      return fail(forward[i - 1]->start_op, forward[i]->start_op,
                  "two values were each observed strictly after the other was written");
    }
  }

  // No backward zone inside a forward zone. Forward zones are disjoint, so
  // only the one with the greatest low end below the backward zone's low
  // end can contain it.
  for (const auto& z : zones) {
    if (z.forward) continue;
    auto it = std::upper_bound(forward.begin(), forward.end(), z.low,
                               [](Micros t, const Zone* f) { return t <= f->low; });
    if (it == forward.begin()) continue;
    const Zone* f = *std::prev(it);
    if (f->low < z.low && z.high < f->high) {
      std::size_t culprit = z.write != kInitial ? z.write : z.start_op;
      return fail(f->start_op, culprit, "a value's whole lifetime falls between another value's write and read");
    }
  }
  return result;
}

}  // namespace wabd
