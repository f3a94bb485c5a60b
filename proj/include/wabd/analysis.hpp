#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "wabd/quorum.hpp"

namespace wabd::analysis {

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  std::string name;
  double capacity = 1.0;  ///< ops/sec the node can serve
  double weight = 1.0;
};

/// Quorums are bitmasks over node positions (bit i = nodes[i]).
using QuorumMask = std::uint32_t;

inline constexpr std::size_t kMaxNodes = 20;

struct QuorumSystem {
  std::vector<Node> nodes;
  std::vector<QuorumMask> quorums;

  std::size_t size() const noexcept { return nodes.size(); }

  std::vector<std::string> names(QuorumMask q) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (q & (QuorumMask{1} << i)) out.push_back(nodes[i].name);
    return out;
  }

  /// Looks a node up by name; throws std::out_of_range.
  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].name == name) return i;
    throw std::out_of_range("unknown node '" + name + "'");
  }
};

inline std::vector<Node> default_nodes(std::size_t n) {
  if (n == 0 || n > kMaxNodes) throw std::invalid_argument(fmt::format("node count must be in 1..{}", kMaxNodes));
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back(Node{fmt::format("p{}", i + 1), 1.0, 1.0});
  return nodes;
}

inline bool intersecting(const std::vector<QuorumMask>& quorums) {
  for (std::size_t a = 0; a < quorums.size(); ++a)
    for (std::size_t b = a; b < quorums.size(); ++b)
      if ((quorums[a] & quorums[b]) == 0) return false;
  return true;
}

/// Drops every quorum that strictly contains another one (and duplicates).
inline std::vector<QuorumMask> minimalize(std::vector<QuorumMask> quorums) {
  std::sort(quorums.begin(), quorums.end());
  quorums.erase(std::unique(quorums.begin(), quorums.end()), quorums.end());
  std::vector<QuorumMask> out;
  for (QuorumMask q : quorums) {
    bool dominated = std::any_of(quorums.begin(), quorums.end(),
                                 [&](QuorumMask p) { return p != q && (p & q) == p; });
    if (!dominated) out.push_back(q);
  }
  return out;
}

/// Minimal quorums of a weighted system: subsets whose weight exceeds half
/// the node count. Weights must be positive and sum to at most n, which
/// makes any two such subsets intersect.
inline QuorumSystem wmqs(std::vector<Node> nodes) {
  const std::size_t n = nodes.size();
  if (n == 0 || n > kMaxNodes) throw std::invalid_argument(fmt::format("node count must be in 1..{}", kMaxNodes));
  double total = 0.0;
  for (const auto& node : nodes) {
    if (!(node.weight > 0.0)) throw std::invalid_argument("weights must be positive");
    total += node.weight;
  }
  if (strictly_less(static_cast<double>(n), total)) throw std::invalid_argument("weights sum to more than n");

  const double half = static_cast<double>(n) / 2.0;
  std::vector<QuorumMask> all;
  for (QuorumMask q = 1; q < (QuorumMask{1} << n); ++q) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (q & (QuorumMask{1} << i)) w += nodes[i].weight;
    if (strictly_less(half, w)) all.push_back(q);
  }
  return QuorumSystem{std::move(nodes), minimalize(std::move(all))};
}

inline QuorumSystem wmqs(const std::vector<double>& weights) {
  auto nodes = default_nodes(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) nodes[i].weight = weights[i];
  return wmqs(std::move(nodes));
}

/// Simple majority: every subset of floor(n/2)+1 nodes.
inline QuorumSystem smqs(std::vector<Node> nodes) {
  for (auto& node : nodes) node.weight = 1.0;
  return wmqs(std::move(nodes));
}

inline QuorumSystem smqs(std::size_t n) { return smqs(default_nodes(n)); }

/// Fastest fully acknowledged quorum: min over quorums of the slowest
/// member's RTT. `rtts_ms[i]` belongs to nodes[i].
inline double quorum_latency(const QuorumSystem& qs, const std::vector<double>& rtts_ms) {
  if (rtts_ms.size() != qs.size()) throw std::invalid_argument("need one RTT per node");
  for (double r : rtts_ms)
    if (!(r > 0.0)) throw std::invalid_argument("RTTs must be positive");
  if (qs.quorums.empty()) throw InfeasibleError("quorum system has no quorums");
  double best = std::numeric_limits<double>::infinity();
  for (QuorumMask q : qs.quorums) {
    double worst = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i)
      if (q & (QuorumMask{1} << i)) worst = std::max(worst, rtts_ms[i]);
    best = std::min(best, worst);
  }
  return best;
}

namespace detail {

/// Solves the square system a x = b in place by partial-pivot elimination.
inline std::optional<std::vector<double>> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-12) return std::nullopt;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double factor = a[r][col] / a[col][col];
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

/// Calls fn(indices) for every k-subset of 0..n-1.
template <class Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

struct CapacityResult {
  double capacity = 0.0;                 ///< ops/sec
  double max_load = 0.0;                 ///< 1 / capacity
  std::vector<double> strategy;          ///< probability per quorum
};

/// Read-only capacity: the largest C such that some distribution p over
/// quorums keeps every node's share C * sum_{q contains i} p_q within its
/// capacity. Equivalently minimizes L = max_i load_i / cap_i.
///
/// Exact: the optimum sits at a vertex of the LP, i.e. a support S of
/// quorums with |S| tight node constraints. Every (S, T) pair with
/// |S| = |T| <= node count is solved and the best feasible one kept.
inline CapacityResult capacity_detail(const QuorumSystem& qs, double read_fraction = 1.0) {
  if (read_fraction != 1.0) throw std::domain_error("only read_fraction = 1 is supported");
  if (qs.quorums.empty()) throw InfeasibleError("quorum system has no quorums");
  const std::size_t m = qs.quorums.size();
  const std::size_t k = qs.size();
  for (const auto& node : qs.nodes)
    if (!(node.capacity > 0.0)) throw std::invalid_argument("capacities must be positive");

  auto member = [&](std::size_t q, std::size_t i) { return (qs.quorums[q] >> i) & 1u; };
  constexpr double kTol = 1e-9;

  CapacityResult best;
  best.max_load = std::numeric_limits<double>::infinity();

  for (std::size_t s = 1; s <= std::min(m, k); ++s) {
    detail::for_each_subset(m, s, [&](const std::vector<std::size_t>& support) {
      detail::for_each_subset(k, s, [&](const std::vector<std::size_t>& tight) {
        // Unknowns: p_support (s values) then L.
        std::vector<std::vector<double>> a(s + 1, std::vector<double>(s + 1, 0.0));
        std::vector<double> b(s + 1, 0.0);
        for (std::size_t r = 0; r < s; ++r) {
          const std::size_t i = tight[r];
          for (std::size_t c = 0; c < s; ++c) a[r][c] = member(support[c], i) / qs.nodes[i].capacity;
          a[r][s] = -1.0;
        }
        for (std::size_t c = 0; c < s; ++c) a[s][c] = 1.0;
        b[s] = 1.0;
        auto x = detail::solve(std::move(a), std::move(b));
        if (!x) return;
        const double load = (*x)[s];
        if (!(load < best.max_load - kTol)) return;
        for (std::size_t c = 0; c < s; ++c)
          if ((*x)[c] < -kTol) return;
        for (std::size_t i = 0; i < k; ++i) {
          double used = 0.0;
          for (std::size_t c = 0; c < s; ++c) used += member(support[c], i) * (*x)[c];
          if (used / qs.nodes[i].capacity > load + kTol) return;
        }
        best.max_load = load;
        best.strategy.assign(m, 0.0);
        for (std::size_t c = 0; c < s; ++c) best.strategy[support[c]] = std::max(0.0, (*x)[c]);
      });
    });
  }
  if (!std::isfinite(best.max_load) || best.max_load <= 0.0) throw InfeasibleError("no feasible quorum strategy");
  best.capacity = 1.0 / best.max_load;
  return best;
}

inline double capacity(const QuorumSystem& qs, double read_fraction = 1.0) {
  return capacity_detail(qs, read_fraction).capacity;
}

}  // namespace wabd::analysis
