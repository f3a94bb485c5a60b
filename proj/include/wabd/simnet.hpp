#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <tuple>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "wabd/types.hpp"

namespace wabd {

/// splitmix64-seeded xoshiro256**; fixed algorithm so traces are the same on
/// every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    for (auto& s : state_) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t bound) noexcept { return bound == 0 ? 0 : next() % bound; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4]{};
};

/// Piecewise-constant one-way latency matrices.
class LatencySchedule {
 public:
  struct Epoch {
    Micros start = 0;
    std::vector<double> one_way_ms;  ///< row-major [src * processes + dst]
  };

  LatencySchedule() = default;
  explicit LatencySchedule(std::size_t processes) : processes_(processes) {}

  void add_epoch(Micros start, std::vector<double> one_way_ms) {
    if (one_way_ms.size() != processes_ * processes_) throw std::invalid_argument("latency matrix has wrong size");
    if (!epochs_.empty() && start <= epochs_.back().start)
      throw std::invalid_argument("epoch start times must strictly increase");
    for (std::size_t i = 0; i < processes_; ++i)
      for (std::size_t j = 0; j < processes_; ++j)
        if (i != j && !(one_way_ms[i * processes_ + j] > 0.0))
          throw std::invalid_argument("latencies must be positive");
    epochs_.push_back(Epoch{start, std::move(one_way_ms)});
  }

  std::size_t processes() const noexcept { return processes_; }
  const std::vector<Epoch>& epochs() const noexcept { return epochs_; }

  double one_way_ms(ProcessId src, ProcessId dst, Micros at) const {
    if (epochs_.empty()) throw std::logic_error("empty latency schedule");
    auto it = std::upper_bound(epochs_.begin(), epochs_.end(), at,
                               [](Micros t, const Epoch& e) { return t < e.start; });
    const Epoch& e = it == epochs_.begin() ? epochs_.front() : *std::prev(it);
    return e.one_way_ms[src * processes_ + dst];
  }

  /// Number of epochs whose start lies in [0, until).
  std::size_t epochs_applied(Micros until) const {
    return static_cast<std::size_t>(std::count_if(epochs_.begin(), epochs_.end(),
                                                  [&](const Epoch& e) { return e.start < until; }));
  }

 private:
  std::size_t processes_ = 0;
  std::vector<Epoch> epochs_;
};

struct CrashPlan {
  std::vector<std::pair<ProcessId, Micros>> crashes;

  std::optional<Micros> crash_time(ProcessId p) const {
    std::optional<Micros> t;
    for (const auto& [id, at] : crashes)
      if (id == p && (!t || at < *t)) t = at;
    return t;
  }
};

template <class Payload>
struct Envelope {
  ProcessId src = 0;
  ProcessId dst = 0;
  Micros send_time = 0;
  Micros deliver_time = 0;
  Payload payload;
};

using TimerId = std::uint64_t;

/// Event ordering rank for simultaneous events.
enum class EventRank : int { Crash = 0, Delivery = 1, Timer = 2 };

/// Deterministic single-threaded discrete-event network: reliable FIFO links,
/// time-varying latencies with seeded multiplicative jitter, timers, crashes.
///
/// Handler must provide:
///   void on_message(const Envelope<Payload>&);
///   void on_timer(ProcessId owner, TimerId id, std::uint64_t tag);
///   void on_crash(ProcessId p, Micros at);
template <class Payload>
class Network {
 public:
  Network(LatencySchedule schedule, CrashPlan crashes, double jitter, std::uint64_t seed)
      : schedule_(std::move(schedule)),
        crashes_(std::move(crashes)),
        jitter_(jitter),
        rng_(seed),
        last_delivery_(schedule_.processes() * schedule_.processes(), 0) {
    if (jitter_ < 0.0 || jitter_ >= 1.0) throw std::invalid_argument("jitter must be in [0, 1)");
    for (const auto& [p, at] : crashes_.crashes) push(Event{at, EventRank::Crash, p, next_seq_++, CrashEvent{p}});
  }

  Micros now() const noexcept { return now_; }
  std::size_t processes() const noexcept { return schedule_.processes(); }
  const LatencySchedule& schedule() const noexcept { return schedule_; }

  bool is_crashed(ProcessId p, Micros at) const {
    auto t = crashes_.crash_time(p);
    return t && *t <= at;
  }

  /// Schedules delivery after the current one-way latency. Sends from a
  /// crashed process are ignored.
  void send(ProcessId src, ProcessId dst, Payload payload) {
    if (src >= processes() || dst >= processes()) throw std::out_of_range("unknown process");
    if (is_crashed(src, now_)) return;
    double ms = schedule_.one_way_ms(src, dst, now_);
    if (jitter_ > 0.0) ms *= rng_.uniform(1.0 - jitter_, 1.0 + jitter_);
    Micros at = now_ + std::max<Micros>(1, from_ms(ms));
    Micros& last = last_delivery_[src * processes() + dst];
    at = std::max(at, last);  // per-link FIFO
    last = at;
    ++sent_;
    push(Event{at, EventRank::Delivery, src, next_seq_++,
               Envelope<Payload>{src, dst, now_, at, std::move(payload)}});
  }

  TimerId set_timer(ProcessId owner, Micros delay, std::uint64_t tag) {
    if (delay <= 0) throw std::invalid_argument("timer delay must be positive");
    TimerId id = next_timer_++;
    push(Event{now_ + delay, EventRank::Timer, owner, next_seq_++, TimerEvent{owner, id, tag}});
    return id;
  }

  void cancel_timer(TimerId id) { cancelled_.insert(id); }

  /// Processes events in (time, rank, src, seq) order until the queue is
  /// empty or the next event lies beyond `until`.
  template <class Handler>
  void run(Micros until, Handler& handler) {
    while (!queue_.empty() && queue_.top().time <= until) {
      // Only the scalar ordering keys are read while popping, so moving the
      // body out of the top element first is safe.
      Event ev = std::move(const_cast<Event&>(queue_.top()));
      queue_.pop();
      now_ = ev.time;
      std::visit(
          [&](auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, CrashEvent>) {
              handler.on_crash(body.process, now_);
            } else if constexpr (std::is_same_v<T, TimerEvent>) {
              if (cancelled_.erase(body.id) > 0) return;
              if (is_crashed(body.owner, now_)) return;
              handler.on_timer(body.owner, body.id, body.tag);
            } else {
              if (is_crashed(body.dst, now_)) return;
              ++delivered_;
              handler.on_message(body);
            }
          },
          ev.body);
    }
    now_ = std::max(now_, until);
  }

  std::uint64_t messages_sent() const noexcept { return sent_; }
  std::uint64_t messages_delivered() const noexcept { return delivered_; }
  bool idle() const noexcept { return queue_.empty(); }

 private:
  struct CrashEvent {
    ProcessId process;
  };
  struct TimerEvent {
    ProcessId owner;
    TimerId id;
    std::uint64_t tag;
  };
  struct Event {
    Micros time;
    EventRank rank;
    ProcessId src;
    std::uint64_t seq;
    std::variant<CrashEvent, TimerEvent, Envelope<Payload>> body;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      return std::tie(a.time, a.rank, a.src, a.seq) > std::tie(b.time, b.rank, b.src, b.seq);
    }
  };

  void push(Event ev) { queue_.push(std::move(ev)); }

  LatencySchedule schedule_;
  CrashPlan crashes_;
  double jitter_;
  Rng rng_;
  std::vector<Micros> last_delivery_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::unordered_set<TimerId> cancelled_;
  Micros now_ = 0;
  std::uint64_t next_seq_ = 0;
  TimerId next_timer_ = 1;
  std::uint64_t sent_ = 0;
  std::uint64_t delivered_ = 0;
};

}  // namespace wabd
