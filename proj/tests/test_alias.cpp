#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace mmlpt;
using namespace testing_support;

namespace {

IpIdSeries series(std::initializer_list<std::pair<std::uint64_t, std::uint16_t>> xs) {
  IpIdSeries s;
  for (auto [seq, id] : xs) s.add(seq, id);
  return s;
}

const StoppingPoints& anchor_table() {
  static const auto sp = StoppingPoints::from_alpha(0.00395);
  return sp;
}

// Ground-truth router groups of the addresses present in `addresses`,
// restricted to routers with the given IP-ID behaviour.
std::vector<std::set<Address>> truth_groups(const SimTopology& t, const std::vector<Address>& addresses,
                                            std::optional<IpIdMode> mode = std::nullopt) {
  std::map<std::string, std::set<Address>> by_router;
  for (auto a : addresses) {
    const auto& n = t.node(*t.index_of(a));
    if (n.router.empty() || (mode && n.ipid_mode != *mode)) continue;
    by_router[n.router].insert(a);
  }
  std::vector<std::set<Address>> out;
  for (auto& [_, s] : by_router) out.push_back(s);
  return out;
}

std::set<Address> interfaces_of(const SimTopology& t, const std::string& router) {
  std::set<Address> out;
  for (const auto& n : t.nodes()) {
    if (n.router == router) out.insert(n.address);
  }
  return out;
}

struct HopRun {
  MultilevelResult result;
  std::vector<AliasPartition> rounds;
};

HopRun run_alias_suite(const SimTopology& t, std::uint64_t seed) {
  Simulator sim(t, seed);
  HopRun r{multilevel_trace(sim, anchor_table(), LiteOptions{}), {}};
  for (const auto& h : r.result.partitions) {
    if (!h.empty() && h.front().hop == 2) r.rounds = h;
  }
  return r;
}

}  // namespace

TEST(Mbt, InterleavedIncreasingSeriesAreCompatible) {
  EXPECT_EQ(mbt_compatible(series({{1, 100}, {3, 110}}), series({{2, 105}, {4, 112}})), MbtResult::compatible);
}

TEST(Mbt, OutOfOrderIdentifierIsIncompatible) {
  EXPECT_EQ(mbt_compatible(series({{1, 100}, {3, 110}}), series({{2, 400}, {4, 95}})), MbtResult::incompatible);
  // One identifier out of place among many is enough.
  EXPECT_EQ(mbt_compatible(series({{1, 10}, {3, 30}, {5, 50}, {7, 70}}), series({{2, 20}, {4, 40}, {6, 60}, {8, 80}})),
            MbtResult::compatible);
  EXPECT_EQ(mbt_compatible(series({{1, 10}, {3, 30}, {5, 50}, {7, 70}}), series({{2, 20}, {4, 29}, {6, 45}, {8, 80}})),
            MbtResult::incompatible);
}

TEST(Mbt, SingleWrapIsAllowed) {
  EXPECT_EQ(mbt_compatible(series({{1, 65520}, {3, 65530}, {5, 3}}), series({{2, 65525}, {4, 65534}, {6, 9}})),
            MbtResult::compatible);
  EXPECT_EQ(mbt_compatible(series({{1, 65530}, {3, 3}}), series({{2, 65533}, {4, 7}})), MbtResult::compatible);
}

TEST(Mbt, UnableCases) {
  const auto ok = series({{2, 105}, {4, 112}});
  EXPECT_EQ(mbt_compatible(series({{1, 100}}), ok), MbtResult::unable);
  EXPECT_EQ(mbt_compatible(series({}), ok), MbtResult::unable);
  EXPECT_EQ(mbt_compatible(series({{1, 0}, {3, 0}, {5, 0}}), ok), MbtResult::unable);
  // Forward in the merged order, but one series jumps more than half the
  // range on its own: no verdict rather than a false alias.
  EXPECT_EQ(mbt_compatible(series({{1, 0}, {3, 40000}}), series({{2, 20000}, {4, 50000}})), MbtResult::unable);
}

TEST(Mbt, SamplesMustArriveInOrder) {
  IpIdSeries s;
  s.add(5, 1);
  EXPECT_THROW(s.add(5, 2), std::invalid_argument);
  EXPECT_THROW(s.add(3, 2), std::invalid_argument);
}

TEST(MbtProperty, SymmetricInItsArguments) {
  std::mt19937_64 rng(11);
  std::array<int, 3> seen{};
  for (int trial = 0; trial < 3000; ++trial) {
    IpIdSeries a, b;
    std::uint16_t counter = static_cast<std::uint16_t>(rng());
    const bool shared = rng() % 2;
    std::uint16_t other = static_cast<std::uint16_t>(rng());
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 1; i <= 2 * n; ++i) {
      const std::uint16_t step = static_cast<std::uint16_t>(1 + rng() % 40);
      auto& target = (rng() % 2) ? a : b;
      if (shared || &target == &a) {
        counter = static_cast<std::uint16_t>(counter + step);
        target.add(static_cast<std::uint64_t>(i), counter);
      } else {
        other = static_cast<std::uint16_t>(other + step);
        target.add(static_cast<std::uint64_t>(i), other);
      }
    }
    const auto ab = mbt_compatible(a, b);
    EXPECT_EQ(ab, mbt_compatible(b, a));
    ++seen[static_cast<std::size_t>(ab)];
  }
  for (int c : seen) EXPECT_GT(c, 0);
}

TEST(InitialTtl, SmallestClassAtOrAbove) {
  EXPECT_EQ(infer_initial_ttl(57), 64);
  EXPECT_EQ(infer_initial_ttl(243), 255);
  EXPECT_EQ(infer_initial_ttl(32), 32);
  EXPECT_EQ(infer_initial_ttl(1), 32);
  EXPECT_EQ(infer_initial_ttl(33), 64);
  EXPECT_EQ(infer_initial_ttl(129), 255);
  EXPECT_THROW(infer_initial_ttl(0), std::out_of_range);
  EXPECT_THROW(infer_initial_ttl(256), std::out_of_range);
}

TEST(InitialTtlProperty, IdempotentOnItsOutputs) {
  for (int ttl = 1; ttl <= 255; ++ttl) {
    const int c = infer_initial_ttl(ttl);
    EXPECT_EQ(infer_initial_ttl(c), c);
    EXPECT_GE(c, ttl);
    EXPECT_TRUE(is_ttl_class(c));
  }
}

TEST(Fingerprints, DifferOnlyOnTheSameReplyKind) {
  EXPECT_TRUE(fingerprints_differ({64, std::nullopt}, {255, std::nullopt}));
  EXPECT_FALSE(fingerprints_differ({64, std::nullopt}, {64, 128}));
  EXPECT_TRUE(fingerprints_differ({64, 64}, {64, 128}));
  EXPECT_FALSE(fingerprints_differ({std::nullopt, 64}, {255, std::nullopt}));
}

TEST(Mpls, ConstantLabelsDecide) {
  EXPECT_EQ(mpls_decision({{17}, {17}}, {{17}}), MplsDecision::affinity);
  EXPECT_EQ(mpls_decision({{17}}, {{18}, {18}}), MplsDecision::split);
  EXPECT_EQ(mpls_decision({{17}, {21}}, {{17}}), MplsDecision::none);
  EXPECT_EQ(mpls_decision({{}}, {{17}}), MplsDecision::none);
  EXPECT_EQ(mpls_decision({}, {{17}}), MplsDecision::none);

  const auto a = ip("10.0.0.1"), b = ip("10.0.0.2"), c = ip("10.0.0.3");
  const auto d = mpls_split({{a, {{17}}}, {b, {{17}}}, {c, {{17}, {21}}}});
  EXPECT_EQ(d.at(ordered_pair(a, b)), MplsDecision::affinity);
  EXPECT_EQ(d.at(ordered_pair(a, c)), MplsDecision::none);
  EXPECT_EQ(d.at(ordered_pair(c, b)), MplsDecision::none);
  EXPECT_EQ(d.size(), 3u);
}

TEST(Evidence, AttributesRepliesToResponders) {
  const auto a = ip("10.2.0.2"), b = ip("10.2.0.3");
  AliasEvidence ev({a, b});
  ExchangeRecord te;
  te.probe.ttl = 2;
  te.reply = {a, ReplyKind::time_exceeded, 7, 62, {100}, 1};
  ev.add(te);
  ExchangeRecord echo;
  echo.probe.kind = ProbeKind::direct;
  echo.probe.target = b;
  echo.reply = {b, ReplyKind::echo_reply, 9, 126, {}, 2};
  ev.add(echo);
  ExchangeRecord lost;
  lost.probe.kind = ProbeKind::direct;
  lost.probe.target = a;
  lost.reply.observed_at = 3;
  ev.add(lost);
  ExchangeRecord stranger;
  stranger.reply = {ip("10.9.9.9"), ReplyKind::time_exceeded, 1, 60, {}, 4};
  ev.add(stranger);

  EXPECT_EQ(ev.series(a).samples.size(), 1u);
  EXPECT_EQ(ev.fingerprint(a).te_initial_ttl, 64);
  EXPECT_FALSE(ev.fingerprint(a).echo_initial_ttl);
  EXPECT_EQ(ev.fingerprint(b).echo_initial_ttl, 128);
  EXPECT_EQ(ev.labels().at(a), std::vector<LabelStack>{{100}});
  EXPECT_TRUE(ev.labels().at(b).empty());
  EXPECT_EQ(ev.probes_toward(a), 2);
  EXPECT_EQ(ev.probes_toward(b), 1);
  EXPECT_FALSE(ev.tracks(ip("10.9.9.9")));
}

TEST(RefineProperty, RoundZeroSetsAreSeparatedByFailedTests) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    std::vector<Address> addrs;
    for (int i = 0; i < n; ++i) addrs.push_back(ip("10.2.0." + std::to_string(i + 1)));
    // Addresses drawn onto a few hidden counters, sampled round-robin.
    const int counters = 1 + static_cast<int>(rng() % 3);
    std::vector<std::uint16_t> value(static_cast<std::size_t>(counters));
    for (auto& v : value) v = static_cast<std::uint16_t>(rng());
    std::vector<int> owner;
    for (int i = 0; i < n; ++i) owner.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(counters)));
    AliasEvidence ev(addrs);
    std::uint64_t clock = 0;
    const int samples = static_cast<int>(rng() % 4);
    for (int k = 0; k < samples; ++k) {
      for (int i = 0; i < n; ++i) {
        auto& v = value[static_cast<std::size_t>(owner[static_cast<std::size_t>(i)])];
        v = static_cast<std::uint16_t>(v + 1 + rng() % 5);
        ExchangeRecord rec;
        rec.reply = {addrs[static_cast<std::size_t>(i)], ReplyKind::time_exceeded, v, 60, {}, ++clock};
        ev.add(rec);
      }
    }
    const auto p = refine(ev, addrs, {}, nullptr, 2, 0, false);

    std::set<Address> covered;
    for (const auto& s : p.sets) {
      for (auto a : s) EXPECT_TRUE(covered.insert(a).second);
    }
    EXPECT_EQ(covered.size(), addrs.size());
    for (std::size_t i = 0; i < p.sets.size(); ++i) {
      for (std::size_t j = i + 1; j < p.sets.size(); ++j) {
        for (auto a : p.sets[i]) {
          for (auto b : p.sets[j]) {
            if (p.status.at(a) != AddressStatus::resolvable || p.status.at(b) != AddressStatus::resolvable) continue;
            EXPECT_TRUE(pair_split(ev, {}, a, b).has_value());
          }
        }
      }
    }
    for (const auto& s : p.sets) {
      if (s.size() < 2) continue;
      for (auto a : s) EXPECT_EQ(p.status.at(a), AddressStatus::resolvable);
    }
  }
}

TEST(Refine, StatusesAndPendingAddresses) {
  const auto a = ip("10.2.0.1"), b = ip("10.2.0.2"), c = ip("10.2.0.3"), d = ip("10.2.0.4");
  AliasEvidence ev({a, b, c, d});
  std::uint64_t clock = 0;
  auto reply = [&](Address who, std::uint16_t id) {
    ExchangeRecord r;
    r.reply = {who, ReplyKind::time_exceeded, id, 60, {}, ++clock};
    ev.add(r);
  };
  reply(a, 10), reply(b, 11), reply(c, 0), reply(a, 12), reply(b, 13), reply(c, 0);
  ExchangeRecord silent;
  silent.probe.kind = ProbeKind::direct;
  silent.probe.target = d;
  silent.reply.observed_at = ++clock;
  ev.add(silent);

  const auto mid = refine(ev, {a, b, c, d}, {}, nullptr, 2, 3, false);
  EXPECT_EQ(mid.status.at(a), AddressStatus::resolvable);
  EXPECT_EQ(mid.status.at(c), AddressStatus::unable_constant);
  EXPECT_EQ(mid.status.at(d), AddressStatus::pending);
  EXPECT_EQ(mid.routers(), (std::vector<std::set<Address>>{{a, b}}));

  const auto last = refine(ev, {a, b, c, d}, {}, &mid, 2, 10, true);
  EXPECT_EQ(last.status.at(d), AddressStatus::unable_unresponsive);
  EXPECT_EQ(last.sets.size(), 3u);
}

TEST(Refine, MplsAffinityLosesToMbtAndIsLogged) {
  const auto a = ip("10.2.0.1"), b = ip("10.2.0.2");
  AliasEvidence ev({a, b});
  std::uint64_t clock = 0;
  for (std::uint16_t k = 0; k < 3; ++k) {
    ExchangeRecord x, y;
    x.reply = {a, ReplyKind::time_exceeded, static_cast<std::uint16_t>(100 + k), 60, {17}, ++clock};
    y.reply = {b, ReplyKind::time_exceeded, static_cast<std::uint16_t>(9000 + k), 60, {17}, ++clock};
    ev.add(x);
    ev.add(y);
  }
  const auto mpls = mpls_split(ev.labels());
  ASSERT_EQ(mpls.at(ordered_pair(a, b)), MplsDecision::affinity);
  const auto p = refine(ev, {a, b}, mpls, nullptr, 2, 0, false);
  EXPECT_TRUE(p.routers().empty());
  ASSERT_EQ(p.conflicts.size(), 1u);
  EXPECT_EQ(p.conflicts.front().test, SplitTest::mbt);
  ASSERT_EQ(p.evidence.size(), 1u);
  EXPECT_EQ(p.evidence.front().test, SplitTest::mbt);
}

TEST(ResolveHop, SuiteGroundTruth) {
  const auto t = load_topology(fixture("alias_suite.json"));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto run = run_alias_suite(t, seed);
    ASSERT_EQ(run.rounds.size(), 11u);
    const auto& r1 = run.rounds[1];
    const auto& last = run.rounds.back();
    const auto addrs = hop_targets(run.result.trace.graph, 2).addresses();

    // A shared counter behind three interfaces is one set by round 1.
    const auto r1_set = interfaces_of(t, "R1");
    ASSERT_NE(r1.set_of(*r1_set.begin()), nullptr);
    EXPECT_EQ(*r1.set_of(*r1_set.begin()), r1_set) << seed;

    const auto shared = truth_groups(t, addrs, IpIdMode::shared_monotonic);
    std::vector<std::set<Address>> shared_multi;
    for (const auto& g : shared) {
      if (g.size() >= 2) shared_multi.push_back(g);
    }
    std::vector<std::set<Address>> declared_shared;
    for (const auto& r : last.routers()) {
      const auto& n = t.node(*t.index_of(*r.begin()));
      if (n.ipid_mode == IpIdMode::shared_monotonic) declared_shared.push_back(r);
    }
    const auto score = score_pairs(alias_pairs(declared_shared), alias_pairs(shared_multi));
    EXPECT_EQ(score.precision, 1.0);
    EXPECT_EQ(score.recall, 1.0);
    // Nothing else is declared at all.
    EXPECT_EQ(score_pairs(alias_pairs(last.routers()), alias_pairs(truth_groups(t, addrs))).precision, 1.0);

    for (auto a : interfaces_of(t, "R3")) {
      ASSERT_NE(last.set_of(a), nullptr);
      EXPECT_EQ(last.set_of(a)->size(), 1u);
      EXPECT_EQ(last.status.at(a), AddressStatus::resolvable);
    }
    for (auto a : interfaces_of(t, "R4")) EXPECT_EQ(last.status.at(a), AddressStatus::unable_constant);
    for (auto a : interfaces_of(t, "R9")) EXPECT_TRUE(is_unable(last.status.at(a)));
    const auto r5 = *interfaces_of(t, "R5").begin(), r6 = *interfaces_of(t, "R6").begin();
    EXPECT_NE(last.set_of(r5), last.set_of(r6));
  }
}

TEST(ResolveHop, RefinementOnlySplitsAmongResolvableAddresses) {
  for (const char* name : {"alias_suite.json", "alias_sparse.json"}) {
    const auto t = load_topology(fixture(name));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto run = run_alias_suite(t, seed);
      for (std::size_t r = 1; r < run.rounds.size(); ++r) {
        const auto& prev = run.rounds[r - 1];
        const auto& cur = run.rounds[r];
        for (const auto& s : cur.sets) {
          std::set<Address> old;
          for (auto a : s) {
            if (prev.status.at(a) == AddressStatus::resolvable) old.insert(a);
          }
          if (old.size() < 2) continue;
          const auto* host = prev.set_of(*old.begin());
          ASSERT_NE(host, nullptr);
          for (auto a : old) EXPECT_TRUE(host->contains(a)) << name << " seed " << seed << " round " << r;
        }
      }
    }
  }
}

TEST(ResolveHop, ScheduleSendsDirectProbesOnlyInRoundOne) {
  const auto t = load_topology(fixture("alias_suite.json"));
  Simulator sim(t, 4);
  AliasSchedule sched;
  sched.rounds = 3;
  sched.probes_per_round = 5;
  const auto r = multilevel_trace(sim, anchor_table(), LiteOptions{}, sched);
  std::size_t n = 0;
  for (int h : multi_address_hops(r.trace.graph)) n += hop_targets(r.trace.graph, h).targets.size();
  std::map<int, std::pair<std::size_t, std::size_t>> per_round;  // direct, indirect
  for (const auto& e : r.log) {
    auto& c = per_round[e.round];
    (e.probe.kind == ProbeKind::direct ? c.first : c.second)++;
  }
  EXPECT_EQ(per_round[1].first, n);
  for (int round = 1; round <= 3; ++round) EXPECT_EQ(per_round[round].second, 5 * n);
  EXPECT_EQ(per_round[2].first, 0u);
  EXPECT_EQ(per_round[0].first, 0u);
  for (const auto& h : r.partitions) EXPECT_EQ(h.size(), 4u);
}

TEST(Scoring, PairCounts) {
  const auto a = ip("10.0.0.1"), b = ip("10.0.0.2"), c = ip("10.0.0.3"), d = ip("10.0.0.4");
  EXPECT_EQ(alias_pairs({{a, b, c}}).size(), 3u);
  EXPECT_TRUE(alias_pairs({{a}, {b}}).empty());
  const auto s = score_pairs(alias_pairs({{a, b}, {c, d}}), alias_pairs({{a, b, c}}));
  EXPECT_EQ(s.true_positives, 1u);
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 1.0 / 3);
  const auto empty = score_pairs({}, {});
  EXPECT_EQ(empty.precision, 1.0);
  EXPECT_EQ(empty.recall, 1.0);
}

TEST(Exchanges, JsonRoundTrip) {
  const auto t = load_topology(fixture("alias_suite.json"));
  Simulator sim(t, 2);
  AliasSchedule sched;
  sched.rounds = 2;
  const auto r = multilevel_trace(sim, anchor_table(), LiteOptions{}, sched);
  ASSERT_FALSE(r.log.empty());
  for (const auto& e : r.log) {
    const auto back = exchange_from_json(to_json(e));
    EXPECT_EQ(to_json(back), to_json(e));
    EXPECT_EQ(back.reply.responder, e.reply.responder);
    EXPECT_EQ(back.reply.ip_id, e.reply.ip_id);
    EXPECT_EQ(back.probe.target, e.probe.target);
  }
  EXPECT_EQ(recorded_rounds(r.log), 2);
}

TEST(Exchanges, OfflineReplayMatchesOnline) {
  for (const char* name : {"alias_suite.json", "alias_sparse.json", "collapse_multiple_smaller.json"}) {
    const auto t = load_topology(fixture(name));
    Simulator sim(t, 6);
    const auto r = multilevel_trace(sim, anchor_table(), LiteOptions{});
    std::vector<ExchangeRecord> log;
    for (const auto& e : r.log) log.push_back(exchange_from_json(to_json(e)));
    EXPECT_EQ(partitions_to_json(offline_partitions(r.trace.graph, log, recorded_rounds(log))),
              partitions_to_json(r.partitions))
        << name;
  }
}
