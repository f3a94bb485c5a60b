#include <gtest/gtest.h>

#include "wabd/abd.hpp"

using namespace wabd;

namespace {
const SystemConfig kConfig = make_config(5, 1, 0.1);
const ViewId v0 = kInitialView;
const ViewId v1{1};
}  // namespace

TEST(AbdServer, ReadReturnsRegisterAndWeightInSameView) {
  RegisterState reg{3, 2, "x"};
  auto ack = server_handle_read(reg, ReadRequest{7, v1}, v1, 1.2);
  EXPECT_EQ(ack.value, "x");
  EXPECT_EQ(ack.ts, 3u);
  EXPECT_EQ(ack.cid, 2u);
  EXPECT_EQ(ack.cnt, 7u);
  EXPECT_EQ(ack.view, v1);
  ASSERT_TRUE(ack.weight);
  EXPECT_DOUBLE_EQ(*ack.weight, 1.2);
  auto stale = server_handle_read(reg, ReadRequest{8, v0}, v1, 1.2);
  EXPECT_FALSE(stale.weight);
  EXPECT_EQ(stale.view, v1);
}

TEST(AbdServer, WriteAdoptsOnlyNewerTimestamps) {
  RegisterState reg{3, 2, "x"};
  server_handle_write(reg, WriteRequest{"y", 3, 1, 1, v0}, v0, 1.0);
  EXPECT_EQ(reg.val, "x");  // (3,1) < (3,2)
  server_handle_write(reg, WriteRequest{"z", 3, 5, 2, v0}, v0, 1.0);
  EXPECT_EQ(reg.val, "z");
  auto ack = server_handle_write(reg, WriteRequest{"w", 9, 1, 3, v1}, v0, 1.0);
  EXPECT_EQ(reg.val, "z");  // view mismatch: no effect
  EXPECT_FALSE(ack.weight);
}

TEST(AbdClient, ReadCompletesAfterWeightedQuorumInBothPhases) {
  ClientState c;
  c.id = 1;
  auto s = client_read(c, 0);
  ASSERT_TRUE(s.broadcast);
  const auto cnt1 = std::get<ReadRequest>(*s.broadcast).cnt;

  auto r = client_handle_readack(c, 0, ReadAck{"a", 1, 9, cnt1, v0, 1.0}, 5, kConfig, 10);
  EXPECT_FALSE(r.broadcast);
  r = client_handle_readack(c, 1, ReadAck{"b", 2, 3, cnt1, v0, 1.0}, 6, kConfig, 12);
  EXPECT_FALSE(r.broadcast);
  r = client_handle_readack(c, 2, ReadAck{"b", 2, 3, cnt1, v0, 1.0}, 7, kConfig, 15);
  ASSERT_TRUE(r.broadcast);  // phase 2 write-back
  ASSERT_TRUE(r.phase_done);
  EXPECT_EQ(r.phase_done->responders, 3u);
  EXPECT_EQ(r.phase_done->first_response_sent_at, 5);
  const auto& wb = std::get<WriteRequest>(*r.broadcast);
  EXPECT_EQ(wb.value, "b");
  EXPECT_EQ(wb.ts, 2u);
  EXPECT_EQ(wb.cid, 3u);

  // Late phase-1 ack is ignored.
  EXPECT_FALSE(client_handle_readack(c, 3, ReadAck{"q", 9, 9, cnt1, v0, 1.0}, 8, kConfig, 16).phase_done);

  client_handle_writeack(c, 0, WriteAck{wb.cnt, v0, 1.0}, 20, kConfig, 25);
  client_handle_writeack(c, 1, WriteAck{wb.cnt, v0, 1.0}, 20, kConfig, 26);
  auto done = client_handle_writeack(c, 4, WriteAck{wb.cnt, v0, 1.0}, 20, kConfig, 30);
  ASSERT_TRUE(done.op_done);
  EXPECT_EQ(done.op_done->value, "b");
  EXPECT_EQ(done.op_done->kind, OpKind::Read);
  EXPECT_EQ(done.op_done->quorum_latency, 15 + 15);
  EXPECT_FALSE(c.op);
}

TEST(AbdClient, TwoHeavyServersFormAQuorum) {
  ClientState c;
  c.id = 4;
  auto s = client_write(c, "v", 0);
  const auto cnt = std::get<ReadRequest>(*s.broadcast).cnt;
  client_handle_readack(c, 0, ReadAck{"", 0, 0, cnt, v0, 1.4}, 0, kConfig, 1);
  auto r = client_handle_readack(c, 1, ReadAck{"", 7, 2, cnt, v0, 1.2}, 0, kConfig, 2);
  ASSERT_TRUE(r.phase_done);
  EXPECT_EQ(r.phase_done->responders, 2u);
  EXPECT_EQ(r.phase_done->responder_mask, 0b11u);
  const auto& w = std::get<WriteRequest>(*r.broadcast);
  EXPECT_EQ(w.ts, 8u);
  EXPECT_EQ(w.cid, 4u);
  EXPECT_EQ(w.value, "v");
}

TEST(AbdClient, NewerViewRestartsOperation) {
  ClientState c;
  auto s = client_read(c, 0);
  const auto cnt = std::get<ReadRequest>(*s.broadcast).cnt;
  client_handle_readack(c, 0, ReadAck{"", 0, 0, cnt, v0, 1.0}, 0, kConfig, 1);
  auto r = client_handle_readack(c, 1, ReadAck{"", 0, 0, cnt, v1, std::nullopt}, 0, kConfig, 2);
  EXPECT_TRUE(r.restarted);
  ASSERT_TRUE(r.broadcast);
  EXPECT_EQ(c.cview, v1);
  const auto& req = std::get<ReadRequest>(*r.broadcast);
  EXPECT_EQ(req.view, v1);
  EXPECT_GT(req.cnt, cnt);
  EXPECT_EQ(c.op->restarts, 1);
  EXPECT_TRUE(c.op->msgs.empty());
}

TEST(AbdClient, WriteRestartedInPropagationKeepsItsTag) {
  ClientState c;
  c.id = 3;
  auto s = client_write(c, "v", 0);
  const auto cnt = std::get<ReadRequest>(*s.broadcast).cnt;
  client_handle_readack(c, 0, ReadAck{"", 5, 1, cnt, v0, 1.0}, 0, kConfig, 1);
  client_handle_readack(c, 1, ReadAck{"", 5, 1, cnt, v0, 1.0}, 0, kConfig, 2);
  auto p2 = client_handle_readack(c, 2, ReadAck{"", 5, 1, cnt, v0, 1.0}, 0, kConfig, 3);
  const auto first = std::get<WriteRequest>(*p2.broadcast);
  EXPECT_EQ(first.ts, 6u);

  // A server in the new view has meanwhile seen a larger timestamp; the
  // restart must still propagate (6, 3), never a second tag for "v".
  auto r = client_handle_writeack(c, 4, WriteAck{first.cnt, v1, std::nullopt}, 0, kConfig, 4);
  ASSERT_TRUE(r.restarted);
  const auto& again = std::get<WriteRequest>(*r.broadcast);
  EXPECT_EQ(again.ts, 6u);
  EXPECT_EQ(again.cid, 3u);
  EXPECT_EQ(again.value, "v");
  EXPECT_EQ(again.view, v1);
  EXPECT_GT(again.cnt, first.cnt);

  for (ServerId srv : {0, 1, 2}) client_handle_writeack(c, srv, WriteAck{again.cnt, v1, 1.0}, 5, kConfig, 6);
  EXPECT_FALSE(c.op);
}

TEST(AbdClient, StaleViewDroppedOrRestartedByPolicy) {
  ClientState c;
  c.cview = v1;
  auto s = client_read(c, 0);
  const auto cnt = std::get<ReadRequest>(*s.broadcast).cnt;
  auto r = client_handle_readack(c, 0, ReadAck{"", 0, 0, cnt, v0, std::nullopt}, 0, kConfig, 1);
  EXPECT_FALSE(r.restarted);
  EXPECT_FALSE(r.broadcast);

  auto lit = client_handle_readack(c, 0, ReadAck{"", 0, 0, cnt, v0, std::nullopt}, 0, kConfig, 1,
                                   RestartPolicy::OnAnyMismatch);
  EXPECT_TRUE(lit.restarted);
  EXPECT_EQ(c.cview, v1);
}

TEST(AbdClient, OldCountersIgnored) {
  ClientState c;
  auto s = client_read(c, 0);
  const auto cnt = std::get<ReadRequest>(*s.broadcast).cnt;
  auto r = client_handle_readack(c, 0, ReadAck{"", 0, 0, cnt - 1, v0, 1.0}, 0, kConfig, 1);
  EXPECT_FALSE(r.broadcast);
  EXPECT_TRUE(c.op->msgs.empty());
}

TEST(AbdClient, RejectsOverlappingAndEmptyWrites) {
  ClientState c;
  EXPECT_THROW(client_write(c, "", 0), std::invalid_argument);
  client_read(c, 0);
  EXPECT_THROW(client_read(c, 1), std::logic_error);
}

TEST(AbdClient, ResendRepeatsCurrentPhase) {
  ClientState c;
  EXPECT_FALSE(client_resend(c));
  auto s = client_read(c, 0);
  auto again = client_resend(c);
  ASSERT_TRUE(again);
  EXPECT_EQ(std::get<ReadRequest>(*again).cnt, std::get<ReadRequest>(*s.broadcast).cnt);
}
