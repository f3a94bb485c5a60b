#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "wabd/messages.hpp"
#include "wabd/quorum.hpp"
#include "wabd/views.hpp"

namespace wabd {

/// Server-side replica of the register. (ts, cid) orders writes
/// lexicographically; cid 0 and the empty value are the initial state.
struct RegisterState {
  std::uint64_t ts = 0;
  ClientId cid = 0;
  Value val;

  bool older_than(std::uint64_t ts2, ClientId cid2) const noexcept {
    return std::tie(ts, cid) < std::tie(ts2, cid2);
  }
};

inline ReadAck server_handle_read(const RegisterState& reg, const ReadRequest& msg, ViewId cview,
                                  double weight) {
  ReadAck ack{reg.val, reg.ts, reg.cid, msg.cnt, cview, std::nullopt};
  if (cview == msg.view) ack.weight = weight;
  return ack;
}

inline WriteAck server_handle_write(RegisterState& reg, const WriteRequest& msg, ViewId cview, double weight) {
  WriteAck ack{msg.cnt, cview, std::nullopt};
  if (cview == msg.view) {
    if (reg.older_than(msg.ts, msg.cid)) {
      reg.ts = msg.ts;
      reg.cid = msg.cid;
      reg.val = msg.value;
    }
    ack.weight = weight;
  }
  return ack;
}

// ---------------------------------------------------------------------------
// Client

enum class OpKind { Read, Write };

inline const char* op_name(OpKind k) { return k == OpKind::Read ? "read" : "write"; }

enum class RestartPolicy {
  OnNewerView,  ///< restart only when a response carries a newer view
  OnAnyMismatch,  ///< restart on any view mismatch, as the pseudo-code literally reads
};

struct PhaseResponse {
  double weight = 0.0;
  Micros sent_at = 0;
  Value value;
  std::uint64_t ts = 0;
  ClientId cid = 0;
};

struct InFlightOp {
  std::uint64_t op_id = 0;  ///< per-client sequence number of the operation
  OpKind kind = OpKind::Read;
  Value write_value;
  int phase = 1;
  Micros invoked_at = 0;
  Micros phase_started_at = 0;
  Micros phase1_latency = 0;
  int restarts = 0;
  /// Value, ts and cid carried into phase 2.
  Value value;
  std::uint64_t ts = 0;
  ClientId cid = 0;
  std::map<ServerId, PhaseResponse> msgs;
};

struct ClientState {
  ClientId id = 1;
  std::uint64_t op_cnt = 0;
  ViewId cview = kInitialView;
  std::optional<InFlightOp> op;
  std::uint64_t next_op_id = 0;
};

struct PhaseDone {
  std::uint64_t op_id = 0;
  std::uint64_t cnt = 0;
  int phase = 1;
  ViewId view;
  Micros started_at = 0;
  Micros completed_at = 0;
  Micros first_response_sent_at = 0;
  double weight = 0.0;
  std::size_t responders = 0;
  std::uint64_t responder_mask = 0;  ///< bit s set when server s is in the quorum
};

struct OpDone {
  std::uint64_t op_id = 0;
  OpKind kind = OpKind::Read;
  Value value;
  std::uint64_t ts = 0;
  ClientId cid = 0;
  Micros invoked_at = 0;
  Micros completed_at = 0;
  Micros quorum_latency = 0;
  ViewId view;
  int restarts = 0;
};

/// What the client asks its runtime to do after an input.
struct ClientStep {
  std::optional<Message> broadcast;
  std::optional<PhaseDone> phase_done;
  std::optional<OpDone> op_done;
  bool restarted = false;
};

namespace detail {
inline Message phase_message(const ClientState& c) {
  const InFlightOp& op = *c.op;
  if (op.phase == 1) return ReadRequest{c.op_cnt, c.cview};
  return WriteRequest{op.value, op.ts, op.cid, c.op_cnt, c.cview};
}

inline ClientStep start_phase(ClientState& c, int phase, Micros now) {
  c.op->phase = phase;
  c.op->phase_started_at = now;
  c.op->msgs.clear();
  ++c.op_cnt;
  return ClientStep{phase_message(c), std::nullopt, std::nullopt, false};
}
}  // namespace detail

/// Starts a read (`kind == Read`) or write of `value`; returns the phase-1
/// broadcast.
inline ClientStep client_begin(ClientState& c, OpKind kind, Value value, Micros now) {
  if (c.op) throw std::logic_error("client already has an operation in flight");
  if (kind == OpKind::Write && value.empty()) throw std::invalid_argument("cannot write the initial value");
  InFlightOp op;
  op.op_id = c.next_op_id++;
  op.kind = kind;
  op.write_value = std::move(value);
  op.invoked_at = now;
  c.op = std::move(op);
  return detail::start_phase(c, 1, now);
}

inline ClientStep client_read(ClientState& c, Micros now) { return client_begin(c, OpKind::Read, {}, now); }
inline ClientStep client_write(ClientState& c, Value value, Micros now) {
  return client_begin(c, OpKind::Write, std::move(value), now);
}

/// Current phase request, for re-polling servers that answered from a stale view.
inline std::optional<Message> client_resend(const ClientState& c) {
  if (!c.op) return std::nullopt;
  return detail::phase_message(c);
}

namespace detail {

inline ClientStep on_view_mismatch(ClientState& c, ViewId v, RestartPolicy policy, Micros now) {
  if (c.cview < v) {
    c.cview = v;
  } else if (policy == RestartPolicy::OnNewerView) {
    return {};
  }
  ++c.op->restarts;
  // A propagation phase keeps its (value, ts, cid): the tag may already sit
  // at some servers, and a fresh tag would publish the value twice.
  if (c.op->phase == 1) c.op->phase1_latency = 0;
  ClientStep step = start_phase(c, c.op->phase, now);
  step.restarted = true;
  return step;
}

inline ClientStep after_response(ClientState& c, const SystemConfig& config, Micros now) {
  InFlightOp& op = *c.op;
  double total = 0.0;
  Micros first_sent = now;
  std::uint64_t mask = 0;
  for (const auto& [s, r] : op.msgs) {
    total += r.weight;
    first_sent = std::min(first_sent, r.sent_at);
    if (s < 64) mask |= std::uint64_t{1} << s;
  }
  if (!is_weighted_quorum(total, config)) return {};

  PhaseDone done{op.op_id,    c.op_cnt, op.phase, c.cview,        op.phase_started_at,
                 now,         first_sent, total,  op.msgs.size(), mask};
  if (op.phase == 1) {
    op.phase1_latency = now - op.phase_started_at;
    if (op.kind == OpKind::Read) {
      const PhaseResponse* best = nullptr;
      for (const auto& [s, r] : op.msgs)
        if (!best || std::tie(best->ts, best->cid) < std::tie(r.ts, r.cid)) best = &r;
      op.value = best->value;
      op.ts = best->ts;
      op.cid = best->cid;
    } else {
      std::uint64_t max_ts = 0;
      for (const auto& [s, r] : op.msgs) max_ts = std::max(max_ts, r.ts);
      op.value = op.write_value;
      op.ts = max_ts + 1;
      op.cid = c.id;
    }
    ClientStep step = start_phase(c, 2, now);
    step.phase_done = done;
    return step;
  }

  OpDone result{op.op_id,    op.kind, op.value, op.ts, op.cid, op.invoked_at, now,
                op.phase1_latency + (now - op.phase_started_at), c.cview, op.restarts};
  c.op.reset();
  ClientStep step;
  step.phase_done = done;
  step.op_done = std::move(result);
  return step;
}

}  // namespace detail

inline ClientStep client_handle_readack(ClientState& c, ServerId from, const ReadAck& ack, Micros sent_at,
                                        const SystemConfig& config, Micros now,
                                        RestartPolicy policy = RestartPolicy::OnNewerView) {
  if (!c.op || c.op->phase != 1 || ack.cnt != c.op_cnt) return {};
  if (ack.view != c.cview || !ack.weight) return detail::on_view_mismatch(c, ack.view, policy, now);
  c.op->msgs[from] = PhaseResponse{*ack.weight, sent_at, ack.value, ack.ts, ack.cid};
  return detail::after_response(c, config, now);
}

inline ClientStep client_handle_writeack(ClientState& c, ServerId from, const WriteAck& ack, Micros sent_at,
                                         const SystemConfig& config, Micros now,
                                         RestartPolicy policy = RestartPolicy::OnNewerView) {
  if (!c.op || c.op->phase != 2 || ack.cnt != c.op_cnt) return {};
  if (ack.view != c.cview || !ack.weight) return detail::on_view_mismatch(c, ack.view, policy, now);
  c.op->msgs[from] = PhaseResponse{*ack.weight, sent_at, {}, 0, 0};
  return detail::after_response(c, config, now);
}

}  // namespace wabd
