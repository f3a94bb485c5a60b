#include <gtest/gtest.h>

#include <random>

#include "wabd/monitor.hpp"

using namespace wabd;

namespace {
LatencyScoreTable table_for(ServerId owner) {
  LatencyScoreTable t;
  t.owner = owner;
  return t;
}
}  // namespace

TEST(Monitor, FirstSampleInitializesThenSmooths) {
  auto t = table_for(0);
  record_rtt(t, 1, 100.0);
  EXPECT_DOUBLE_EQ(*t.score(1), 100.0);
  record_rtt(t, 1, 50.0);
  EXPECT_DOUBLE_EQ(*t.score(1), 0.2 * 50.0 + 0.8 * 100.0);
}

TEST(Monitor, OwnSamplesAreIgnored) {
  auto t = table_for(3);
  record_rtt(t, 3, 10.0);
  EXPECT_FALSE(t.score(3).has_value());
  EXPECT_TRUE(t.peer_scores().empty());
}

TEST(Monitor, SelfScoreIsTriangulated) {
  auto t = table_for(0);
  record_rtt(t, 1, 30.0);
  record_rtt(t, 2, 40.0);
  EXPECT_FALSE(t.self_score().has_value());  // no peer-to-peer report yet
  record_peer_table(t, 1, {{0, 30.0}, {2, 50.0}});
  ASSERT_TRUE(t.self_score().has_value());
  EXPECT_DOUBLE_EQ(*t.self_score(), 30.0 + 40.0 - 50.0);
  // Both directions of a pair are averaged.
  record_peer_table(t, 2, {{0, 40.0}, {1, 54.0}});
  EXPECT_DOUBLE_EQ(*t.self_score(), 30.0 + 40.0 - 52.0);
}

TEST(Monitor, SelfScoreHasFloor) {
  auto t = table_for(0);
  record_rtt(t, 1, 10.0);
  record_rtt(t, 2, 10.0);
  record_peer_table(t, 1, {{2, 100.0}});
  EXPECT_DOUBLE_EQ(*t.self_score(), kSelfScoreFloorMs);
}

TEST(Monitor, SlowerPeersSlowestFirst) {
  auto t = table_for(0);
  t.scores = {{0, 20.0}, {1, 60.0}, {2, 10.0}, {3, 90.0}, {4, 20.0}};
  EXPECT_EQ(slower_peers(t), (std::vector<ServerId>{3, 1}));
  t.scores.erase(0);
  EXPECT_TRUE(slower_peers(t).empty());
}

TEST(Monitor, ThresholdComparesPairShares) {
  auto t = table_for(0);
  t.scores = {{0, 40.0}, {1, 60.0}, {2, 44.0}};
  // shares 0.4 vs 0.6 for peer 1; about 0.476 vs 0.524 for peer 2
  EXPECT_TRUE(exceeds_threshold(t, 1, 0.05));
  EXPECT_FALSE(exceeds_threshold(t, 2, 0.05));
  EXPECT_TRUE(exceeds_threshold(t, 2, 0.0));
  EXPECT_FALSE(exceeds_threshold(t, 1, 0.2));
  EXPECT_FALSE(exceeds_threshold(t, 7, 0.0));
}

// EWMA stays within the range of its samples and converges to a constant
// input.
TEST(Monitor, EwmaBoundedAndConvergent) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(1.0, 500.0);
  auto t = table_for(0);
  double lo = 1e9, hi = 0.0;
  for (int i = 0; i < 500; ++i) {
    double s = dist(rng);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    record_rtt(t, 1, s);
    EXPECT_GE(*t.score(1), lo - 1e-9);
    EXPECT_LE(*t.score(1), hi + 1e-9);
  }
  for (int i = 0; i < 200; ++i) record_rtt(t, 1, 42.0);
  EXPECT_NEAR(*t.score(1), 42.0, 1e-6);
}

// With additive link latencies every server's triangulated self-score is
// below exactly the peers with a slower access link.
TEST(Monitor, AdditiveModelOrdersServersConsistently) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(5.0, 200.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 5);
    std::vector<double> access(n);
    for (auto& a : access) a = dist(rng);
    auto rtt = [&](int i, int j) { return access[i] + access[j]; };
    std::vector<LatencyScoreTable> tables;
    for (int i = 0; i < n; ++i) {
      auto t = table_for(static_cast<ServerId>(i));
      for (int j = 0; j < n; ++j)
        if (j != i) record_rtt(t, static_cast<ServerId>(j), rtt(i, j));
      tables.push_back(t);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j != i) record_peer_table(tables[i], static_cast<ServerId>(j), tables[j].peer_scores());
    for (int i = 0; i < n; ++i) {
      EXPECT_NEAR(*tables[i].self_score(), std::max(kSelfScoreFloorMs, 2 * access[i]), 1e-9);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        auto slower = slower_peers(tables[i]);
        bool listed = std::find(slower.begin(), slower.end(), static_cast<ServerId>(j)) != slower.end();
        EXPECT_EQ(listed, access[i] < access[j]);
      }
    }
  }
}
