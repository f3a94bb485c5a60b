#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>

namespace wabd {

/// Position of a view in the linear view sequence. v0 has index 0.
struct ViewId {
  std::uint32_t index = 0;

  friend constexpr auto operator<=>(ViewId, ViewId) = default;
};

inline constexpr ViewId kInitialView{0};

constexpr ViewId succ(ViewId v) noexcept { return ViewId{v.index + 1}; }

/// Predecessor; undefined for v0.
inline ViewId pred(ViewId v) {
  if (v.index == 0) throw std::domain_error("pred(v0) is undefined");
  return ViewId{v.index - 1};
}

/// Upper bound on the view sequence length; views are requested finitely
/// often, so succ-chasing never needs to go further than this.
inline constexpr std::uint32_t kMaxViewIndex = 1u << 20;

/// True iff `w` is reachable from `v` by one or more succ steps. Walks the
/// succ chain the way the recursive definition does and gives up once the
/// walk passes `w` (or the sequence bound), where the unbounded recursion
/// would never return.
constexpr bool more_up_to_date(ViewId v, ViewId w) noexcept {
  ViewId cur = v;
  while (cur.index < kMaxViewIndex) {
    cur = succ(cur);
    if (cur == w) return true;
    if (cur.index > w.index) return false;
  }
  return false;
}

}  // namespace wabd

template <>
struct std::hash<wabd::ViewId> {
  std::size_t operator()(wabd::ViewId v) const noexcept { return v.index; }
};
