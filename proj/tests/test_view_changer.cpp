#include <gtest/gtest.h>

#include "wabd/view_changer.hpp"

using namespace wabd;

namespace {
const SystemConfig kConfig = make_config(5, 1, 0.1);

template <class T>
std::size_t count_of(const std::vector<Message>& msgs) {
  return static_cast<std::size_t>(
      std::count_if(msgs.begin(), msgs.end(), [](const Message& m) { return std::holds_alternative<T>(m); }));
}
}  // namespace

TEST(ViewChanger, TimeoutRequestsNextViewOnce) {
  ViewChangerState st(0);
  auto first = on_view_timeout(st);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(std::get<ChangeView>(first[0]).view, ViewId{1});
  EXPECT_TRUE(on_view_timeout(st).empty());
  EXPECT_TRUE(change_requested(st));
}

TEST(ViewChanger, StartChangeRelaysDisablesAndPublishes) {
  ViewChangerState st(2);
  handle_change_view(st, ChangeView{ViewId{1}});
  RegisterState reg{4, 7, "x"};
  auto out = maybe_start_change(st, reg, 1.3);
  EXPECT_EQ(count_of<ChangeView>(out), 1u);  // S1 relay
  ASSERT_EQ(count_of<StateUpdate>(out), 1u);
  const auto& su = std::get<StateUpdate>(out.back());
  EXPECT_EQ(su.value, "x");
  EXPECT_EQ(su.ts, 4u);
  EXPECT_EQ(su.cid, 7u);
  EXPECT_EQ(su.view, kInitialView);
  EXPECT_DOUBLE_EQ(su.weight, 1.3);
  EXPECT_FALSE(st.rw_enabled);  // S2
  EXPECT_TRUE(st.dirty_views.contains(ViewId{1}));  // S3
  EXPECT_TRUE(maybe_start_change(st, reg, 1.3).empty());  // not twice
}

TEST(ViewChanger, NoRelayWhenAlreadySent) {
  ViewChangerState st(0);
  on_view_timeout(st);
  auto out = maybe_start_change(st, RegisterState{}, 1.0);
  EXPECT_EQ(count_of<ChangeView>(out), 0u);
  EXPECT_EQ(count_of<StateUpdate>(out), 1u);
}

TEST(ViewChanger, InstallNeedsStrictWeightedMajority) {
  ViewChangerState st(0);
  RegisterState reg{1, 1, "a"};
  on_view_timeout(st);
  maybe_start_change(st, reg, 1.0);  // own update, weight 1
  handle_state_update(st, 1, StateUpdate{"b", 3, 2, kInitialView, 1.5});
  EXPECT_FALSE(try_install(st, reg, kConfig));  // 2.5 is not > 2.5
  handle_state_update(st, 2, StateUpdate{"c", 3, 1, kInitialView, 0.7});
  auto r = try_install(st, reg, kConfig);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->to, ViewId{1});
  EXPECT_NEAR(r->quorum_weight, 3.2, 1e-12);
  EXPECT_EQ(r->contributors, 3u);
  // S4 merge: max ts, then max cid.
  EXPECT_EQ(reg.val, "b");
  EXPECT_EQ(reg.ts, 3u);
  EXPECT_EQ(reg.cid, 2u);
  EXPECT_EQ(st.cview, ViewId{1});
  EXPECT_TRUE(st.rw_enabled);
  EXPECT_FALSE(st.changing);
}

TEST(ViewChanger, UpdatesForOtherViewsDoNotCount) {
  ViewChangerState st(0);
  RegisterState reg;
  on_view_timeout(st);
  maybe_start_change(st, reg, 1.0);
  handle_state_update(st, 1, StateUpdate{"", 0, 0, ViewId{3}, 2.0});
  handle_state_update(st, 2, StateUpdate{"", 0, 0, ViewId{3}, 2.0});
  EXPECT_FALSE(try_install(st, reg, kConfig));
}

TEST(ViewChanger, EarlyUpdatesAreKeptForLater) {
  ViewChangerState st(0);
  RegisterState reg;
  // Peers already publish their v0 state before this server's timer fires.
  handle_state_update(st, 1, StateUpdate{"", 0, 0, kInitialView, 1.0});
  handle_state_update(st, 2, StateUpdate{"", 0, 0, kInitialView, 1.0});
  handle_change_view(st, ChangeView{ViewId{1}});
  maybe_start_change(st, reg, 1.0);
  EXPECT_TRUE(try_install(st, reg, kConfig));
}

TEST(ViewChanger, ConflictingStateIsAProtocolError) {
  std::set<StateUpdateRecord> records{{0, "a", 5, 1, kInitialView, 1.0}, {1, "b", 5, 1, kInitialView, 1.0}};
  EXPECT_THROW(merge_state_updates(records, kInitialView), ProtocolError);
  EXPECT_THROW(merge_state_updates({}, kInitialView), ProtocolError);
}

TEST(ViewChanger, ConsecutiveChanges) {
  ViewChangerState st(0);
  RegisterState reg;
  for (std::uint32_t k = 0; k < 5; ++k) {
    on_view_timeout(st);
    maybe_start_change(st, reg, 1.0);
    handle_state_update(st, 1, StateUpdate{"", 0, 0, ViewId{k}, 1.0});
    handle_state_update(st, 2, StateUpdate{"", 0, 0, ViewId{k}, 1.0});
    auto r = try_install(st, reg, kConfig);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->to, ViewId{k + 1});
  }
  // Records older than cview - 1 are dropped.
  for (const auto& r : st.state_updates) EXPECT_GE(r.view.index + 1, st.cview.index);
}
