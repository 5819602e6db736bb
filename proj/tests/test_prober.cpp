#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace mmlpt;
using namespace testing_support;

namespace {

SimTopology black_hole_chain() {
  return topology_from_json(nlohmann::json::parse(R"({
    "source": "192.0.2.1", "destination": "10.3.0.1",
    "nodes": [{"addr": "10.1.0.1"}, {"addr": "10.2.0.1", "response_prob": 0.0}, {"addr": "10.3.0.1"}],
    "edges": [["10.1.0.1", "10.2.0.1"], ["10.2.0.1", "10.3.0.1"]]})"));
}

Probe at(std::uint64_t flow, int ttl) {
  Probe p;
  p.flow = FlowId{flow};
  p.ttl = ttl;
  return p;
}

std::vector<Probe> mixed_probes(int n) {
  std::vector<Probe> ps;
  for (int i = 0; i < n; ++i) {
    Probe p;
    p.flow = FlowId{static_cast<std::uint64_t>(i * 7 + 1)};
    p.ttl = 1 + i % 4;
    p.probe_id = static_cast<std::uint64_t>(i);
    ps.push_back(p);
  }
  return ps;
}

}  // namespace

TEST(Send, TtlOneExpiresAtTheFirstHop) {
  const auto t = load_topology(fixture("simplest_diamond.json"));
  Simulator sim(t, 1);
  const auto r = sim.send(at(5, 1));
  EXPECT_EQ(r.kind, ReplyKind::time_exceeded);
  ASSERT_TRUE(r.responder);
  EXPECT_EQ(*r.responder, ip("10.1.0.2"));
  EXPECT_TRUE(r.ip_id.has_value());
}

TEST(Send, TtlAtOrBeyondThePathReachesTheDestination) {
  const auto t = load_topology(fixture("simplest_diamond.json"));
  Simulator sim(t, 1);
  for (int ttl : {3, 4, 30}) {
    const auto r = sim.send(at(9, ttl));
    EXPECT_EQ(r.kind, ReplyKind::destination_unreachable) << ttl;
    ASSERT_TRUE(r.responder);
    EXPECT_EQ(*r.responder, t.destination_address());
  }
}

TEST(Send, BlackHoleTimesOut) {
  const auto t = black_hole_chain();
  Simulator sim(t, 1);
  const auto r = sim.send(at(1, 2));
  EXPECT_EQ(r.kind, ReplyKind::none);
  EXPECT_FALSE(r.responder);
  EXPECT_FALSE(r.ip_id);
  EXPECT_FALSE(r.answered());
  EXPECT_EQ(sim.send(at(1, 3)).kind, ReplyKind::destination_unreachable);
}

TEST(Send, ObservedAtIsMonotonic) {
  const auto t = load_topology(fixture("four_two_unmeshed.json"));
  Simulator sim(t, 4);
  std::uint64_t last = 0;
  for (const auto& p : mixed_probes(50)) {
    const auto r = sim.send(p);
    EXPECT_GT(r.observed_at, last);
    last = r.observed_at;
  }
}

TEST(Send, ClosedSessionThrows) {
  const auto t = load_topology(fixture("chain.json"));
  Simulator sim(t, 1);
  sim.send(at(1, 1));
  sim.close();
  EXPECT_FALSE(sim.is_open());
  EXPECT_THROW(sim.send(at(1, 1)), SessionClosed);
  const auto ps = mixed_probes(3);
  EXPECT_THROW(sim.send_batch(ps, 2), SessionClosed);
  EXPECT_EQ(sim.probes_sent(), 1u);
}

TEST(SendBatch, OrderAndContentDoNotDependOnWindow) {
  const auto t = load_topology(fixture("four_two_meshed.json"));
  const auto ps = mixed_probes(200);
  Simulator seq(t, 11), one(t, 11), wide(t, 11);
  std::vector<ProbeReply> expected;
  for (const auto& p : ps) expected.push_back(seq.send(p));
  const auto a = one.send_batch(ps, 1);
  const auto b = wide.send_batch(ps, 16);
  ASSERT_EQ(a.size(), ps.size());
  ASSERT_EQ(b.size(), ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (const auto* r : {&a[i], &b[i]}) {
      EXPECT_EQ(r->responder, expected[i].responder);
      EXPECT_EQ(r->kind, expected[i].kind);
      EXPECT_EQ(r->ip_id, expected[i].ip_id);
      EXPECT_EQ(r->reply_ttl, expected[i].reply_ttl);
      EXPECT_EQ(r->mpls_labels, expected[i].mpls_labels);
      EXPECT_EQ(r->observed_at, expected[i].observed_at);
    }
  }
  EXPECT_THROW(one.send_batch(ps, 0), std::invalid_argument);
}

TEST(SendBatch, ReproducibleForAFixedSeed) {
  const auto t = load_topology(fixture("alias_suite.json"));
  const auto ps = mixed_probes(300);
  Simulator x(t, 99), y(t, 99);
  const auto a = x.send_batch(ps, 16);
  const auto b = y.send_batch(ps, 16);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(a[i].responder, b[i].responder);
    EXPECT_EQ(a[i].ip_id, b[i].ip_id);
  }
}

TEST(ReplyInvariants, NoneMeansNoResponderAndIdOnlyWithResponder) {
  const auto t = load_topology(fixture("alias_sparse.json"));
  Simulator sim(t, 3);
  int timeouts = 0;
  for (const auto& p : mixed_probes(500)) {
    const auto r = sim.send(p);
    if (r.kind == ReplyKind::none) {
      ++timeouts;
      EXPECT_FALSE(r.responder);
    }
    EXPECT_EQ(r.ip_id.has_value(), r.responder.has_value());
  }
  EXPECT_GT(timeouts, 0);
}

TEST(RecordingProber, LogsEveryExchangeWithItsRound) {
  const auto t = load_topology(fixture("four_two_unmeshed.json"));
  Simulator sim(t, 2);
  RecordingProber rec(sim);
  const auto ps = mixed_probes(10);
  rec.send_batch(std::span(ps).first(4), 3);
  rec.set_round(2);
  for (std::size_t i = 4; i < ps.size(); ++i) rec.send(ps[i]);
  ASSERT_EQ(rec.log().size(), ps.size());
  EXPECT_EQ(sim.probes_sent(), ps.size());
  std::set<std::uint64_t> ids;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(rec.log()[i].probe.probe_id, ps[i].probe_id);
    EXPECT_EQ(rec.log()[i].round, i < 4 ? 0 : 2);
    ids.insert(rec.log()[i].probe.probe_id);
  }
  EXPECT_EQ(ids.size(), ps.size());
  rec.close();
  EXPECT_THROW(rec.send(ps[0]), SessionClosed);
}

TEST(ReplyKindNames, RoundTrip) {
  for (auto k : {ReplyKind::none, ReplyKind::time_exceeded, ReplyKind::destination_unreachable, ReplyKind::echo_reply}) {
    EXPECT_EQ(reply_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(reply_kind_from_string("bogus"), std::invalid_argument);
}
