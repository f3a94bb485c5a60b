#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "wabd/types.hpp"

namespace wabd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Guard for strict weight comparisons. Weights are sums of 1 and multiples
/// of epsilon; the guard keeps accumulated rounding from turning `a == b`
/// into `a > b`.
inline constexpr double kWeightSlack = 1e-9;

constexpr bool strictly_less(double a, double b) noexcept { return a < b - kWeightSlack; }

struct SystemConfig {
  int n = 0;
  int f = 0;
  double epsilon = 0.0;
  double wl = 0.0;  ///< per-server weight lower bound n/(2(n-f))
  double wu = 0.0;  ///< per-server weight upper bound n/(2f)

  constexpr double half() const noexcept { return static_cast<double>(n) / 2.0; }
};

inline SystemConfig make_config(int n, int f, double epsilon) {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (f < 1) throw ConfigError("f must be >= 1 (wu = n/(2f) is undefined for f = 0)");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be > 0");
  if (2 * f + 1 > n) {
    throw ConfigError("2f+1 > n: need n >= " + std::to_string(2 * f + 1) + " servers for f = " +
                      std::to_string(f));
  }
  SystemConfig c;
  c.n = n;
  c.f = f;
  c.epsilon = epsilon;
  c.wl = static_cast<double>(n) / (2.0 * (n - f));
  c.wu = static_cast<double>(n) / (2.0 * f);
  if (c.wu < 1.0) throw ConfigError("wu < 1");
  if (!(c.wl < 1.0 && 1.0 < c.wu)) throw ConfigError("expected wl < 1 < wu");
  if (!(epsilon < c.wu - 1.0)) throw ConfigError("epsilon must be < wu - 1");
  return c;
}

/// Weighted-majority predicate: total weight strictly above n/2.
constexpr bool is_weighted_quorum(double total_weight, const SystemConfig& config) noexcept {
  return strictly_less(config.half(), total_weight);
}

/// Total at most n, and every weight strictly inside (wl, wu).
inline bool check_weight_assignment(const std::map<ServerId, double>& weights,
                                    const SystemConfig& config) {
  if (static_cast<int>(weights.size()) != config.n) return false;
  double total = 0.0;
  for (const auto& [server, w] : weights) {
    if (!(strictly_less(config.wl, w) && strictly_less(w, config.wu))) return false;
    total += w;
  }
  return total <= static_cast<double>(config.n) + kWeightSlack;
}

}  // namespace wabd
