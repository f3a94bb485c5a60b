#pragma once

#include <vector>

#include <fmt/format.h>

#include "wabd/abd.hpp"
#include "wabd/runtime.hpp"

namespace wabd {

/// Closed-loop client: issues its next operation as soon as the previous
/// one completes, reading with probability `read_ratio`. Written values are
/// "c<cid>-<k>", unique across the run.
class ClientProcess {
 public:
  ClientProcess(ProcessId pid, ClientId cid, const SystemConfig& config, const ProtocolSettings& settings,
                double read_ratio, std::uint64_t seed)
      : pid_(pid), config_(config), settings_(settings), read_ratio_(read_ratio), rng_(seed) {
    state_.id = cid;
  }

  ProcessId pid() const noexcept { return pid_; }
  ClientId cid() const noexcept { return state_.id; }
  const ClientState& state() const noexcept { return state_; }
  const std::vector<OpDone>& completed() const noexcept { return completed_; }
  const std::vector<PhaseDone>& phases() const noexcept { return phases_; }

  void start(Context& ctx) { ctx.timer(pid_, 1, timer_tag(TimerKind::NextOp)); }

  void on_timer(Context& ctx, std::uint64_t tag) {
    switch (timer_kind(tag)) {
      case TimerKind::NextOp:
        begin_next(ctx);
        break;
      case TimerKind::Resend:
        if (state_.op && state_.op_cnt == timer_arg(tag)) {
          if (auto m = client_resend(state_)) ctx.to_all_servers(pid_, *m);
          ctx.timer(pid_, settings_.timers.resend_interval, tag);
        }
        break;
      default:
        break;
    }
  }

  void on_message(Context& ctx, const Envelope<Message>& env) {
    ClientStep step;
    if (const auto* r = std::get_if<ReadAck>(&env.payload)) {
      step = client_handle_readack(state_, env.src, *r, env.send_time, config_, ctx.now(), settings_.restart);
    } else if (const auto* w = std::get_if<WriteAck>(&env.payload)) {
      step = client_handle_writeack(state_, env.src, *w, env.send_time, config_, ctx.now(), settings_.restart);
    } else {
      return;
    }
    apply(ctx, std::move(step));
  }

 private:
  void begin_next(Context& ctx) {
    const bool read = rng_.uniform() < read_ratio_;
    Value value = read ? Value{} : fmt::format("c{}-{}", state_.id, writes_++);
    ClientStep step = client_begin(state_, read ? OpKind::Read : OpKind::Write, value, ctx.now());
    ctx.note("invoke", pid_, -1,
             fmt::format("client={} op={} kind={} value={}", state_.id, state_.op->op_id, read ? "read" : "write",
                         read ? "-" : value));
    apply(ctx, std::move(step));
  }

  void apply(Context& ctx, ClientStep step) {
    if (step.phase_done) {
      const PhaseDone& p = *step.phase_done;
      ctx.note("phase", pid_, -1,
               fmt::format("client={} op={} phase={} cnt={} view={} start={:.3f} first={:.3f} weight={:.6g} "
                           "responders={} mask={}",
                           state_.id, p.op_id, p.phase, p.cnt, p.view.index, to_ms(p.started_at),
                           to_ms(p.first_response_sent_at), p.weight, p.responders, p.responder_mask));
      phases_.push_back(p);
    }
    if (step.broadcast) {
      ctx.to_all_servers(pid_, *step.broadcast);
      ctx.timer(pid_, settings_.timers.resend_interval, timer_tag(TimerKind::Resend, state_.op_cnt));
    }
    if (step.op_done) {
      const OpDone& d = *step.op_done;
      ctx.note("complete", pid_, -1,
               fmt::format("client={} op={} kind={} value={} ts={} wcid={} invoke={:.3f} latency={:.3f} "
                           "quorum_latency={:.3f} view={} restarts={}",
                           state_.id, d.op_id, op_name(d.kind), d.value.empty() ? "-" : d.value, d.ts, d.cid,
                           to_ms(d.invoked_at), to_ms(d.completed_at - d.invoked_at), to_ms(d.quorum_latency),
                           d.view.index, d.restarts));
      completed_.push_back(std::move(*step.op_done));
      ctx.timer(pid_, 1, timer_tag(TimerKind::NextOp));
    }
  }

  ProcessId pid_;
  SystemConfig config_;
  ProtocolSettings settings_;
  double read_ratio_;
  Rng rng_;
  ClientState state_;
  std::uint64_t writes_ = 0;
  std::vector<OpDone> completed_;
  std::vector<PhaseDone> phases_;
};

}  // namespace wabd
