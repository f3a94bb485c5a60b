#pragma once

#include <deque>
#include <map>
#include <variant>

#include <fmt/format.h>

#include "wabd/abd.hpp"
#include "wabd/monitor.hpp"
#include "wabd/pwr.hpp"
#include "wabd/runtime.hpp"
#include "wabd/view_changer.hpp"

namespace wabd {

/// One storage server: latency monitor, pairwise weight reassignment, view
/// changer and the ABD register, driven by messages and timers.
class ServerProcess {
 public:
  ServerProcess(ServerId id, const SystemConfig& config, const ProtocolSettings& settings)
      : id_(id), config_(config), settings_(settings), pwr_(id, config.epsilon), vc_(id) {
    table_.owner = id;
  }

  ServerId id() const noexcept { return id_; }
  ViewId cview() const noexcept { return vc_.cview; }
  const RegisterState& reg() const noexcept { return reg_; }
  const PwrState& pwr() const noexcept { return pwr_; }
  const ViewChangerState& view_changer() const noexcept { return vc_; }
  const LatencyScoreTable& scores() const noexcept { return table_; }

  double weight(ViewId v) const { return settings_.weighted ? get_weight(pwr_, v) : 1.0; }

  void start(Context& ctx) {
    if (!settings_.weighted) return;
    ctx.timer(id_, settings_.timers.ping_interval, timer_tag(TimerKind::Ping));
    ctx.timer(id_, settings_.timers.propose_interval, timer_tag(TimerKind::Propose));
    arm_view_timer(ctx);
  }

  void on_timer(Context& ctx, std::uint64_t tag) {
    switch (timer_kind(tag)) {
      case TimerKind::Ping:
        ctx.to_other_servers(id_, Ping{ctx.now()});
        ctx.timer(id_, settings_.timers.ping_interval, tag);
        break;
      case TimerKind::Propose:
        while (auto p = try_propose(pwr_, vc_.cview, vc_.dirty_views, table_, config_, settings_.tau))
          ctx.send(id_, p->target, p->message);
        ctx.timer(id_, settings_.timers.propose_interval, tag);
        break;
      case TimerKind::View:
        if (timer_arg(tag) != vc_.cview.index) break;  // view already left
        for (auto& m : on_view_timeout(vc_)) ctx.to_other_servers(id_, m);
        advance(ctx);
        break;
      default:
        break;
    }
  }

  void on_message(Context& ctx, const Envelope<Message>& env) {
    const ServerId from = env.src;
    std::visit(
        detail::overloaded{
            [&](const Ping& m) { ctx.send(id_, from, Pong{m.sent_at, table_.peer_scores()}); },
            [&](const Pong& m) {
              record_rtt(table_, from, to_ms(ctx.now() - m.ping_sent_at));
              record_peer_table(table_, from, m.scores);
            },
            [&](const ProposePwr& m) {
              if (!settings_.weighted) return;
              if (auto accept = handle_propose(pwr_, from, m, vc_.cview, vc_.dirty_views, table_, config_))
                ctx.send(id_, from, *accept);
            },
            [&](const AcceptPwr& m) {
              if (settings_.weighted) handle_accept(pwr_, from, m, vc_.cview, vc_.dirty_views);
            },
            [&](const ChangeView& m) {
              handle_change_view(vc_, m);
              advance(ctx);
            },
            [&](const StateUpdate& m) {
              handle_state_update(vc_, from, m);
              advance(ctx);
            },
            [&](const ReadRequest&) { serve_or_queue(ctx, env); },
            [&](const WriteRequest&) { serve_or_queue(ctx, env); },
            [&](const ReadAck&) {},
            [&](const WriteAck&) {},
        },
        env.payload);
  }

  /// Final per-view weights for the trace: the frozen weight of every view
  /// this server marked dirty, and the current books for views it has
  /// transfer records for but never froze.
  void dump_weights(Context& ctx) const {
    std::map<std::uint32_t, double> out(frozen_.begin(), frozen_.end());
    for (const auto& p : pwr_.pwrs)
      if (!out.contains(p.view.index)) out.emplace(p.view.index, weight(p.view));
    for (const auto& [k, w] : out) ctx.note("vweight", id_, -1, fmt::format("view={} w={:.6g}", k, w));
  }

  /// Weight of each view at the moment this server marked it dirty.
  const std::map<std::uint32_t, double>& frozen_weights() const noexcept { return frozen_; }

 private:
  void arm_view_timer(Context& ctx) {
    if (vc_.cview.index >= settings_.max_views) return;
    ctx.timer(id_, settings_.timers.view_timeout, timer_tag(TimerKind::View, vc_.cview.index));
  }

  void serve_or_queue(Context& ctx, const Envelope<Message>& env) {
    if (!vc_.rw_enabled) {
      queued_.push_back(env);
      return;
    }
    serve(ctx, env);
  }

  void serve(Context& ctx, const Envelope<Message>& env) {
    const double w = weight(vc_.cview);
    if (const auto* r = std::get_if<ReadRequest>(&env.payload)) {
      ctx.send(id_, env.src, server_handle_read(reg_, *r, vc_.cview, w));
    } else if (const auto* wr = std::get_if<WriteRequest>(&env.payload)) {
      ctx.send(id_, env.src, server_handle_write(reg_, *wr, vc_.cview, w));
    }
  }

  /// Runs view-change steps until no further progress is possible.
  void advance(Context& ctx) {
    while (true) {
      if (change_requested(vc_)) {
        const ViewId next = succ(vc_.cview);
        auto out = maybe_start_change(vc_, reg_, weight(vc_.cview));
        frozen_[next.index] = weight(next);
        ctx.note("weight", id_, -1, fmt::format("view={} w={:.6g}", next.index, frozen_[next.index]));
        for (auto& m : out) ctx.to_other_servers(id_, m);
        continue;
      }
      auto installed = try_install(vc_, reg_, config_);
      if (!installed) return;
      on_install(ctx, *installed);
    }
  }

  void on_install(Context& ctx, const InstallResult& r) {
    ctx.note("install", id_, -1,
             fmt::format("view={} quorum={:.6g} contributors={} ts={} cid={}", r.to.index, r.quorum_weight,
                         r.contributors, r.ts, r.cid));
    auto self = table_.self_score();
    std::string peers;
    for (const auto& [s, v] : table_.peer_scores()) peers += fmt::format("{}{}:{:.3f}", peers.empty() ? "" : ",", s, v);
    ctx.note("score", id_, -1,
             fmt::format("view={} self={} peers={}", r.to.index, self ? fmt::format("{:.3f}", *self) : "-",
                         peers.empty() ? "-" : peers));
    collect_stale_requests(pwr_, vc_.cview);
    std::erase_if(pwr_.pwrs, [&](const PwrRecord& p) { return p.view.index + 1 < vc_.cview.index; });
    arm_view_timer(ctx);
    auto pending = std::move(queued_);
    queued_.clear();
    for (const auto& env : pending) serve(ctx, env);
  }

  ServerId id_;
  SystemConfig config_;
  ProtocolSettings settings_;
  LatencyScoreTable table_;
  PwrState pwr_;
  ViewChangerState vc_;
  RegisterState reg_;
  std::map<std::uint32_t, double> frozen_{{0, 1.0}};
  std::deque<Envelope<Message>> queued_;
};

}  // namespace wabd
