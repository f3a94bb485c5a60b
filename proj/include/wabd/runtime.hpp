#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "wabd/abd.hpp"
#include "wabd/messages.hpp"
#include "wabd/simnet.hpp"
#include "wabd/trace.hpp"

namespace wabd {

/// Timer settings shared by all processes of one simulation.
struct TimerSettings {
  Micros view_timeout = from_ms(20000);
  Micros propose_interval = from_ms(1000);
  Micros ping_interval = from_ms(500);
  Micros resend_interval = from_ms(2000);
};

struct ProtocolSettings {
  bool weighted = true;  ///< false: weights pinned at 1, no pwr, no view changes
  TimerSettings timers;
  double tau = 0.05;
  std::uint32_t max_views = 64;  ///< view timers stop once this index is installed
  RestartPolicy restart = RestartPolicy::OnNewerView;
};

/// What a process may do to the outside world.
class Context {
 public:
  Context(Network<Message>& net, Trace& trace, std::size_t servers) : net_(net), trace_(trace), servers_(servers) {}

  Micros now() const noexcept { return net_.now(); }
  std::size_t servers() const noexcept { return servers_; }

  void send(ProcessId src, ProcessId dst, Message m) { net_.send(src, dst, std::move(m)); }

  /// Sends to every server except `src` itself.
  void to_other_servers(ProcessId src, const Message& m) {
    for (ProcessId s = 0; s < servers_; ++s)
      if (s != src) net_.send(src, s, m);
  }

  void to_all_servers(ProcessId src, const Message& m) {
    for (ProcessId s = 0; s < servers_; ++s) net_.send(src, s, m);
  }

  TimerId timer(ProcessId owner, Micros delay, std::uint64_t tag) { return net_.set_timer(owner, delay, tag); }

  void note(std::string event, ProcessId src, std::int64_t dst, std::string detail) {
    trace_.add(now(), std::move(event), src, dst, std::move(detail));
  }

 private:
  Network<Message>& net_;
  Trace& trace_;
  std::size_t servers_;
};

/// Timer tags: kind in the top byte, argument below.
enum class TimerKind : std::uint64_t { Ping = 1, Propose = 2, View = 3, Resend = 4, NextOp = 5 };

constexpr std::uint64_t timer_tag(TimerKind kind, std::uint64_t arg = 0) noexcept {
  return (static_cast<std::uint64_t>(kind) << 56) | (arg & ((std::uint64_t{1} << 56) - 1));
}
constexpr TimerKind timer_kind(std::uint64_t tag) noexcept { return static_cast<TimerKind>(tag >> 56); }
constexpr std::uint64_t timer_arg(std::uint64_t tag) noexcept { return tag & ((std::uint64_t{1} << 56) - 1); }

}  // namespace wabd
