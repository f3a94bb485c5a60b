#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace wabd {

/// Simulated process address. Servers occupy [0, n), clients follow.
using ProcessId = std::uint32_t;
using ServerId = ProcessId;

/// ABD writer id; 0 is reserved for the initial register state.
using ClientId = std::uint32_t;

/// Simulated time in microseconds.
using Micros = std::int64_t;

inline Micros from_ms(double ms) noexcept { return static_cast<Micros>(std::llround(ms * 1000.0)); }
constexpr double to_ms(Micros t) noexcept { return static_cast<double>(t) / 1000.0; }

/// Register values are opaque strings; the empty string is the initial
/// "no value" marker and is never written by a client.
using Value = std::string;

}  // namespace wabd
