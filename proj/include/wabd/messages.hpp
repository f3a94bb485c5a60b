#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <fmt/format.h>

#include "wabd/types.hpp"
#include "wabd/views.hpp"

namespace wabd {

struct Ping {
  Micros sent_at = 0;
};

/// Echoes the ping timestamp and piggybacks the responder's peer RTTs.
struct Pong {
  Micros ping_sent_at = 0;
  std::map<ServerId, double> scores;
};

struct ProposePwr {
  ViewId view;
  double epsilon = 0.0;
};

struct AcceptPwr {
  ViewId view;
  double epsilon = 0.0;
};

struct ChangeView {
  ViewId view;
};

struct StateUpdate {
  Value value;
  std::uint64_t ts = 0;
  ClientId cid = 0;
  ViewId view;
  double weight = 0.0;
};

struct ReadRequest {
  std::uint64_t cnt = 0;
  ViewId view;
};

/// `weight` is empty when the server's view differed from the request's.
struct ReadAck {
  Value value;
  std::uint64_t ts = 0;
  ClientId cid = 0;
  std::uint64_t cnt = 0;
  ViewId view;
  std::optional<double> weight;
};

struct WriteRequest {
  Value value;
  std::uint64_t ts = 0;
  ClientId cid = 0;
  std::uint64_t cnt = 0;
  ViewId view;
};

struct WriteAck {
  std::uint64_t cnt = 0;
  ViewId view;
  std::optional<double> weight;
};

using Message = std::variant<Ping, Pong, ProposePwr, AcceptPwr, ChangeView, StateUpdate, ReadRequest,
                             ReadAck, WriteRequest, WriteAck>;

namespace detail {
template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

inline std::string weight_text(const std::optional<double>& w) {
  return w ? fmt::format("{:.6g}", *w) : std::string("-");
}
inline std::string value_text(const Value& v) { return v.empty() ? std::string("-") : v; }
}  // namespace detail

inline std::string_view kind_name(const Message& m) {
  static constexpr std::string_view names[] = {"ping",        "pong",         "propose_pwr", "accept_pwr",
                                               "change_view", "state_update", "read",        "readack",
                                               "write",       "writeack"};
  return names[m.index()];
}

/// Single-line `kind key=value ...` rendering used in trace logs.
inline std::string summarize(const Message& m) {
  using detail::value_text;
  using detail::weight_text;
  return std::visit(
      detail::overloaded{
          [](const Ping& p) { return fmt::format("ping sent={:.3f}", to_ms(p.sent_at)); },
          [](const Pong& p) {
            std::string out = fmt::format("pong sent={:.3f} scores=", to_ms(p.ping_sent_at));
            bool first = true;
            for (const auto& [s, v] : p.scores) {
              out += fmt::format("{}{}:{:.3f}", first ? "" : ",", s, v);
              first = false;
            }
            if (first) out += "-";
            return out;
          },
          [](const ProposePwr& p) { return fmt::format("propose_pwr view={} eps={:.6g}", p.view.index, p.epsilon); },
          [](const AcceptPwr& p) { return fmt::format("accept_pwr view={} eps={:.6g}", p.view.index, p.epsilon); },
          [](const ChangeView& p) { return fmt::format("change_view view={}", p.view.index); },
          [](const StateUpdate& p) {
            return fmt::format("state_update val={} ts={} cid={} view={} weight={:.6g}", value_text(p.value), p.ts,
                               p.cid, p.view.index, p.weight);
          },
          [](const ReadRequest& p) { return fmt::format("read cnt={} view={}", p.cnt, p.view.index); },
          [](const ReadAck& p) {
            return fmt::format("readack val={} ts={} cid={} cnt={} view={} weight={}", value_text(p.value), p.ts,
                               p.cid, p.cnt, p.view.index, weight_text(p.weight));
          },
          [](const WriteRequest& p) {
            return fmt::format("write val={} ts={} cid={} cnt={} view={}", value_text(p.value), p.ts, p.cid, p.cnt,
                               p.view.index);
          },
          [](const WriteAck& p) {
            return fmt::format("writeack cnt={} view={} weight={}", p.cnt, p.view.index, weight_text(p.weight));
          },
      },
      m);
}

}  // namespace wabd
