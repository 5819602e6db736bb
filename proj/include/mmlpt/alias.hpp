#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mmlpt/graph.hpp"
#include "mmlpt/prober.hpp"

namespace mmlpt {

// ---------------------------------------------------------------------------
// Monotonic Bounds Test

struct IpIdSample {
  std::uint64_t sequence = 0;
  std::uint16_t ip_id = 0;
};

struct IpIdSeries {
  Address address;
  std::vector<IpIdSample> samples;

  void add(std::uint64_t sequence, std::uint16_t ip_id) {
    if (!samples.empty() && sequence <= samples.back().sequence) {
      throw std::invalid_argument("IP-ID samples must arrive in increasing sequence order");
    }
    samples.push_back({sequence, ip_id});
  }
};

/// A forward step of the 16-bit counter. Anything in the upper half of the
/// range is read as the counter going backwards.
inline bool forward_step(std::uint16_t from, std::uint16_t to) {
  const auto d = static_cast<std::uint16_t>(to - from);
  return d >= 1 && d < 0x8000;
}

enum class SeriesQuality { ok, insufficient, constant, non_monotonic };

inline const char* to_string(SeriesQuality q) {
  switch (q) {
    case SeriesQuality::ok: return "ok";
    case SeriesQuality::insufficient: return "insufficient";
    case SeriesQuality::constant: return "constant";
    case SeriesQuality::non_monotonic: return "non-monotonic";
  }
  return "ok";
}

inline constexpr std::size_t kMinSeriesSamples = 2;
inline constexpr std::size_t kMinMergedSamples = 3;

inline SeriesQuality series_quality(const IpIdSeries& s) {
  if (s.samples.size() < kMinSeriesSamples) return SeriesQuality::insufficient;
  const auto first = s.samples.front().ip_id;
  if (std::ranges::all_of(s.samples, [&](const IpIdSample& x) { return x.ip_id == first; })) {
    return SeriesQuality::constant;
  }
  for (std::size_t i = 1; i < s.samples.size(); ++i) {
    if (!forward_step(s.samples[i - 1].ip_id, s.samples[i].ip_id)) return SeriesQuality::non_monotonic;
  }
  return SeriesQuality::ok;
}

enum class MbtResult { compatible, incompatible, unable };

inline const char* to_string(MbtResult r) {
  switch (r) {
    case MbtResult::compatible: return "compatible";
    case MbtResult::incompatible: return "incompatible";
    case MbtResult::unable: return "unable";
  }
  return "unable";
}

/// Merges both series on the shared sequence axis and requires every step
/// of the merged sequence to move the counter forward by less than half its
/// range, which allows one wrap between neighbours and nothing more.
///
/// A series that is too short or constant gives no verdict. An out-of-order
/// merged identifier is conclusive even when one series is odd on its own;
/// otherwise a series that is not monotonic by itself gives no verdict.
inline MbtResult mbt_compatible(const IpIdSeries& a, const IpIdSeries& b) {
  const auto qa = series_quality(a), qb = series_quality(b);
  if (qa == SeriesQuality::insufficient || qb == SeriesQuality::insufficient || qa == SeriesQuality::constant ||
      qb == SeriesQuality::constant) {
    return MbtResult::unable;
  }
  std::vector<IpIdSample> merged;
  merged.reserve(a.samples.size() + b.samples.size());
  std::ranges::merge(a.samples, b.samples, std::back_inserter(merged),
                     [](const IpIdSample& x, const IpIdSample& y) { return x.sequence < y.sequence; });
  if (merged.size() < kMinMergedSamples) return MbtResult::unable;
  for (std::size_t i = 1; i < merged.size(); ++i) {
    if (!forward_step(merged[i - 1].ip_id, merged[i].ip_id)) return MbtResult::incompatible;
  }
  if (qa != SeriesQuality::ok || qb != SeriesQuality::ok) return MbtResult::unable;
  return MbtResult::compatible;
}

// ---------------------------------------------------------------------------
// Fingerprints and MPLS labels

inline int infer_initial_ttl(int reply_ttl) {
  if (reply_ttl < 1 || reply_ttl > 255) throw std::out_of_range("reply TTL must lie in [1, 255]");
  for (int c : {32, 64, 128}) {
    if (reply_ttl <= c) return c;
  }
  return 255;
}

struct Fingerprint {
  std::optional<int> te_initial_ttl;
  std::optional<int> echo_initial_ttl;
};

/// Different initial TTLs on the same kind of reply mean different routers.
inline bool fingerprints_differ(const Fingerprint& a, const Fingerprint& b) {
  if (a.te_initial_ttl && b.te_initial_ttl && *a.te_initial_ttl != *b.te_initial_ttl) return true;
  return a.echo_initial_ttl && b.echo_initial_ttl && *a.echo_initial_ttl != *b.echo_initial_ttl;
}

enum class MplsDecision { none, split, affinity };

inline const char* to_string(MplsDecision d) {
  switch (d) {
    case MplsDecision::none: return "none";
    case MplsDecision::split: return "split";
    case MplsDecision::affinity: return "affinity";
  }
  return "none";
}

using LabelStack = std::vector<std::uint32_t>;

/// The label stack an interface always answers with, if it has one.
inline std::optional<LabelStack> constant_label(const std::vector<LabelStack>& observed) {
  if (observed.empty() || observed.front().empty()) return std::nullopt;
  for (const auto& s : observed) {
    if (s != observed.front()) return std::nullopt;
  }
  return observed.front();
}

inline MplsDecision mpls_decision(const std::vector<LabelStack>& a, const std::vector<LabelStack>& b) {
  const auto la = constant_label(a), lb = constant_label(b);
  if (!la || !lb) return MplsDecision::none;
  return *la == *lb ? MplsDecision::affinity : MplsDecision::split;
}

using AddressPair = std::pair<Address, Address>;

inline AddressPair ordered_pair(Address a, Address b) { return a < b ? AddressPair{a, b} : AddressPair{b, a}; }

/// Pairwise decisions for every two addresses of one hop.
inline std::map<AddressPair, MplsDecision> mpls_split(const std::map<Address, std::vector<LabelStack>>& labels) {
  std::map<AddressPair, MplsDecision> out;
  for (auto i = labels.begin(); i != labels.end(); ++i) {
    for (auto j = std::next(i); j != labels.end(); ++j) {
      out[ordered_pair(i->first, j->first)] = mpls_decision(i->second, j->second);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evidence gathered from replies

/// Everything the alias tests know about the addresses of one hop, built
/// from probe/reply records up to some round.
class AliasEvidence {
 public:
  explicit AliasEvidence(std::vector<Address> addresses) {
    for (auto a : addresses) {
      series_[a].address = a;
      fingerprints_[a];
      labels_[a];
      probed_[a] = 0;
    }
  }

  bool tracks(Address a) const { return series_.contains(a); }

  /// Direct probes are attributed to their target; indirect ones to the
  /// responder.
  void add(const ExchangeRecord& rec) {
    const auto& r = rec.reply;
    if (rec.probe.kind == ProbeKind::direct && rec.probe.target && tracks(*rec.probe.target)) {
      ++probed_[*rec.probe.target];
    }
    if (!r.answered() || !r.responder || !tracks(*r.responder)) return;
    const Address a = *r.responder;
    if (rec.probe.kind == ProbeKind::indirect) ++probed_[a];
    if (r.ip_id) {
      auto& s = series_[a];
      if (s.samples.empty() || r.observed_at > s.samples.back().sequence) s.add(r.observed_at, *r.ip_id);
    }
    auto& fp = fingerprints_[a];
    if (r.reply_ttl >= 1 && r.reply_ttl <= 255) {
      const int cls = infer_initial_ttl(r.reply_ttl);
      if (r.kind == ReplyKind::echo_reply) {
        if (!fp.echo_initial_ttl) fp.echo_initial_ttl = cls;
      } else if (!fp.te_initial_ttl) {
        fp.te_initial_ttl = cls;
      }
    }
    if (r.kind != ReplyKind::echo_reply) labels_[a].push_back(r.mpls_labels);
  }

  const IpIdSeries& series(Address a) const { return series_.at(a); }
  const Fingerprint& fingerprint(Address a) const { return fingerprints_.at(a); }
  const std::map<Address, std::vector<LabelStack>>& labels() const { return labels_; }
  int probes_toward(Address a) const { return probed_.at(a); }

 private:
  std::map<Address, IpIdSeries> series_;
  std::map<Address, Fingerprint> fingerprints_;
  std::map<Address, std::vector<LabelStack>> labels_;
  std::map<Address, int> probed_;
};

// ---------------------------------------------------------------------------
// Set-based refinement

enum class AddressStatus { resolvable, pending, unable_constant, unable_non_monotonic, unable_unresponsive,
                           unable_insufficient };

inline const char* to_string(AddressStatus s) {
  switch (s) {
    case AddressStatus::resolvable: return "resolvable";
    case AddressStatus::pending: return "pending";
    case AddressStatus::unable_constant: return "unable-constant";
    case AddressStatus::unable_non_monotonic: return "unable-non-monotonic";
    case AddressStatus::unable_unresponsive: return "unable-unresponsive";
    case AddressStatus::unable_insufficient: return "unable-insufficient";
  }
  return "pending";
}

inline bool is_unable(AddressStatus s) { return s != AddressStatus::resolvable && s != AddressStatus::pending; }

enum class SplitTest { fingerprint, mpls, mbt };

inline const char* to_string(SplitTest t) {
  switch (t) {
    case SplitTest::fingerprint: return "fingerprint";
    case SplitTest::mpls: return "mpls";
    case SplitTest::mbt: return "mbt";
  }
  return "mbt";
}

struct SplitEvidence {
  Address a;
  Address b;
  SplitTest test = SplitTest::mbt;
};

struct AliasPartition {
  int hop = 0;
  int round = 0;
  std::vector<std::set<Address>> sets;
  std::map<Address, AddressStatus> status;
  std::vector<SplitEvidence> evidence;
  /// Pairs whose MPLS affinity a later test contradicted.
  std::vector<SplitEvidence> conflicts;

  /// Sets of two or more addresses: the routers this round declares.
  std::vector<std::set<Address>> routers() const {
    std::vector<std::set<Address>> out;
    for (const auto& s : sets) {
      if (s.size() >= 2) out.push_back(s);
    }
    return out;
  }

  const std::set<Address>* set_of(Address a) const {
    for (const auto& s : sets) {
      if (s.contains(a)) return &s;
    }
    return nullptr;
  }
};

/// Why two addresses cannot be aliases, if anything says so.
inline std::optional<SplitTest> pair_split(const AliasEvidence& ev, const std::map<AddressPair, MplsDecision>& mpls,
                                           Address a, Address b) {
  if (fingerprints_differ(ev.fingerprint(a), ev.fingerprint(b))) return SplitTest::fingerprint;
  if (auto it = mpls.find(ordered_pair(a, b)); it != mpls.end() && it->second == MplsDecision::split) {
    return SplitTest::mpls;
  }
  if (mbt_compatible(ev.series(a), ev.series(b)) != MbtResult::compatible) return SplitTest::mbt;
  return std::nullopt;
}

inline AddressStatus address_status(const AliasEvidence& ev, Address a, bool final_round) {
  const auto& s = ev.series(a);
  if (s.samples.empty() && ev.probes_toward(a) > 0 && final_round) return AddressStatus::unable_unresponsive;
  switch (series_quality(s)) {
    case SeriesQuality::ok: return AddressStatus::resolvable;
    case SeriesQuality::constant: return AddressStatus::unable_constant;
    case SeriesQuality::non_monotonic: return AddressStatus::unable_non_monotonic;
    case SeriesQuality::insufficient: return final_round ? AddressStatus::unable_insufficient : AddressStatus::pending;
  }
  return AddressStatus::pending;
}

/// One refinement step. Each set of the previous partition splits into the
/// connected components of its "no test failed" graph, so that every
/// address has failed some test with every address of every other set.
/// Addresses that only now became resolvable join the first set holding an
/// address they are compatible with. Round 0 starts from one candidate set
/// holding every resolvable address.
inline AliasPartition refine(const AliasEvidence& ev, const std::vector<Address>& addresses,
                             const std::map<AddressPair, MplsDecision>& mpls, const AliasPartition* previous, int hop,
                             int round, bool final_round) {
  AliasPartition p;
  p.hop = hop;
  p.round = round;
  for (auto a : addresses) p.status[a] = address_status(ev, a, final_round);

  std::vector<std::vector<Address>> candidates;
  std::vector<Address> newcomers;
  auto resolvable = [&](Address a) { return p.status[a] == AddressStatus::resolvable; };
  if (previous) {
    for (const auto& s : previous->sets) {
      std::vector<Address> keep;
      for (auto a : s) {
        const auto it = previous->status.find(a);
        const bool was = it != previous->status.end() && it->second == AddressStatus::resolvable;
        if (!resolvable(a)) continue;
        (was ? keep : newcomers).push_back(a);
      }
      if (!keep.empty()) candidates.push_back(std::move(keep));
    }
    for (auto a : addresses) {
      if (resolvable(a) && !previous->set_of(a)) newcomers.push_back(a);
    }
  } else {
    std::vector<Address> all;
    for (auto a : addresses) {
      if (resolvable(a)) all.push_back(a);
    }
    if (!all.empty()) candidates.push_back(std::move(all));
  }

  for (const auto& cand : candidates) {
    const auto n = cand.size();
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    auto root = [&](std::size_t i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    std::vector<std::optional<SplitTest>> why(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        why[i * n + j] = pair_split(ev, mpls, cand[i], cand[j]);
        if (!why[i * n + j]) parent[root(i)] = root(j);
      }
    }
    std::map<std::size_t, std::set<Address>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[root(i)].insert(cand[i]);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (root(i) != root(j)) p.evidence.push_back({cand[i], cand[j], *why[i * n + j]});
      }
    }
    for (auto& [_, g] : groups) p.sets.push_back(std::move(g));
  }

  auto accepts = [&](const std::set<Address>& group, Address a) {
    return std::ranges::any_of(group, [&](Address m) { return !pair_split(ev, mpls, a, m); });
  };
  for (auto a : newcomers) {
    bool placed = false;
    for (auto& g : p.sets) {
      if (accepts(g, a)) {
        g.insert(a);
        placed = true;
        break;
      }
    }
    if (!placed) p.sets.push_back({a});
  }
  for (auto a : addresses) {
    if (!resolvable(a)) p.sets.push_back({a});
  }

  for (const auto& [pair, decision] : mpls) {
    if (decision != MplsDecision::affinity) continue;
    const auto* sa = p.set_of(pair.first);
    if (sa && !sa->contains(pair.second) && resolvable(pair.first) && resolvable(pair.second)) {
      if (auto why = pair_split(ev, mpls, pair.first, pair.second)) p.conflicts.push_back({pair.first, pair.second, *why});
    }
  }
  std::ranges::sort(p.sets, [](const auto& x, const auto& y) { return *x.begin() < *y.begin(); });
  return p;
}

// ---------------------------------------------------------------------------
// Probing schedule

struct AliasSchedule {
  int rounds = 10;
  int probes_per_round = 30;
};

/// Targets of one hop: each address with a flow known to reach it there.
struct HopTargets {
  int hop = 0;
  std::vector<std::pair<Address, FlowId>> targets;

  std::vector<Address> addresses() const {
    std::vector<Address> out;
    for (const auto& [a, _] : targets) out.push_back(a);
    return out;
  }
};

/// The responsive addresses of `hop`, each paired with the lowest flow the
/// trace saw there.
inline HopTargets hop_targets(const MultipathGraph& g, int hop) {
  HopTargets t;
  t.hop = hop;
  std::map<Address, FlowId> best;
  for (const auto& [flow, path] : g.flow_log()) {
    auto it = path.find(hop);
    if (it == path.end() || it->second.is_star()) continue;
    auto [pos, inserted] = best.emplace(it->second, flow);
    if (!inserted && flow < pos->second) pos->second = flow;
  }
  for (const auto& v : g.layer(hop)) {
    if (!v.responsive) continue;
    if (auto it = best.find(v.address); it != best.end()) t.targets.emplace_back(v.address, it->second);
  }
  return t;
}

/// Sends round `round` of the schedule: round 1 opens with one direct probe
/// per address, and every round sends `probes_per_round` indirect probes to
/// each address, round-robin so that the IP-ID samples interleave.
inline void probe_round(RecordingProber& prober, const HopTargets& t, int round, const AliasSchedule& sched,
                        std::uint64_t& probe_id) {
  prober.set_round(round);
  if (round == 1) {
    for (const auto& [a, flow] : t.targets) {
      prober.send(Probe{flow, t.hop, ProbeKind::direct, ++probe_id, a});
    }
  }
  for (int i = 0; i < sched.probes_per_round; ++i) {
    for (const auto& [a, flow] : t.targets) {
      prober.send(Probe{flow, t.hop, ProbeKind::indirect, ++probe_id, std::nullopt});
    }
  }
}

/// Partitions for rounds 0..max_round from recorded exchanges. MPLS
/// decisions are taken from round-0 data and then held fixed.
inline std::vector<AliasPartition> partitions_from_log(const std::vector<ExchangeRecord>& log,
                                                       const std::vector<Address>& addresses, int hop,
                                                       int max_round) {
  std::vector<AliasPartition> out;
  AliasEvidence ev(addresses);
  std::map<AddressPair, MplsDecision> mpls;
  for (int round = 0; round <= max_round; ++round) {
    for (const auto& rec : log) {
      if (rec.round == round) ev.add(rec);
    }
    if (round == 0) {
      std::map<Address, std::vector<LabelStack>> labels;
      for (auto a : addresses) labels[a] = ev.labels().at(a);
      mpls = mpls_split(labels);
    }
    out.push_back(refine(ev, addresses, mpls, out.empty() ? nullptr : &out.back(), hop, round, round == max_round));
  }
  return out;
}

/// Runs the probing schedule on one hop and returns the partition after
/// every round. `trace_log` holds the round-0 exchanges from the trace; the
/// alias rounds are appended to `prober`'s log.
inline std::vector<AliasPartition> resolve_hop(RecordingProber& prober, const std::vector<ExchangeRecord>& trace_log,
                                               const HopTargets& targets, const AliasSchedule& sched = {}) {
  std::uint64_t probe_id = 1'000'000'000;
  const auto start = prober.log().size();
  for (int round = 1; round <= sched.rounds; ++round) probe_round(prober, targets, round, sched, probe_id);
  std::vector<ExchangeRecord> log;
  for (const auto& rec : trace_log) log.push_back({rec.probe, rec.reply, 0});
  log.insert(log.end(), prober.log().begin() + static_cast<std::ptrdiff_t>(start), prober.log().end());
  return partitions_from_log(log, targets.addresses(), targets.hop, sched.rounds);
}

// ---------------------------------------------------------------------------
// Scoring against ground truth

inline std::set<AddressPair> alias_pairs(const std::vector<std::set<Address>>& groups) {
  std::set<AddressPair> out;
  for (const auto& g : groups) {
    for (auto i = g.begin(); i != g.end(); ++i) {
      for (auto j = std::next(i); j != g.end(); ++j) out.insert(ordered_pair(*i, *j));
    }
  }
  return out;
}

struct AliasScore {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t true_positives = 0;
  std::size_t declared = 0;
  std::size_t actual = 0;
};

/// Empty denominators score 1.0: nothing claimed is nothing wrong.
inline AliasScore score_pairs(const std::set<AddressPair>& declared, const std::set<AddressPair>& truth) {
  AliasScore s;
  s.declared = declared.size();
  s.actual = truth.size();
  for (const auto& p : declared) s.true_positives += truth.contains(p) ? 1 : 0;
  if (s.declared) s.precision = static_cast<double>(s.true_positives) / static_cast<double>(s.declared);
  if (s.actual) s.recall = static_cast<double>(s.true_positives) / static_cast<double>(s.actual);
  return s;
}

inline nlohmann::json to_json(const AliasPartition& p) {
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& s : p.sets) {
    nlohmann::json members = nlohmann::json::array();
    for (auto a : s) members.push_back(a.to_string());
    sets.push_back(members);
  }
  nlohmann::json status = nlohmann::json::object();
  for (const auto& [a, st] : p.status) status[a.to_string()] = to_string(st);
  auto pairs = [](const std::vector<SplitEvidence>& xs) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : xs) out.push_back({{"a", e.a.to_string()}, {"b", e.b.to_string()}, {"test", to_string(e.test)}});
    return out;
  };
  return {{"hop", p.hop},         {"round", p.round},           {"sets", sets},
          {"status", status},     {"evidence", pairs(p.evidence)}, {"conflicts", pairs(p.conflicts)}};
}

// Replies are logged so that refinement can be replayed offline.
inline nlohmann::json to_json(const ExchangeRecord& r) {
  nlohmann::json j{{"round", r.round},
                   {"flow", r.probe.flow.value},
                   {"ttl", r.probe.ttl},
                   {"kind", r.probe.kind == ProbeKind::direct ? "direct" : "indirect"},
                   {"reply", to_string(r.reply.kind)},
                   {"reply_ttl", r.reply.reply_ttl},
                   {"observed_at", r.reply.observed_at},
                   {"mpls", r.reply.mpls_labels}};
  if (r.probe.target) j["target"] = r.probe.target->to_string();
  if (r.reply.responder) j["responder"] = r.reply.responder->to_string();
  if (r.reply.ip_id) j["ip_id"] = *r.reply.ip_id;
  return j;
}

inline ExchangeRecord exchange_from_json(const nlohmann::json& j) {
  ExchangeRecord r;
  r.round = j.at("round").get<int>();
  r.probe.flow = FlowId{j.at("flow").get<std::uint64_t>()};
  r.probe.ttl = j.at("ttl").get<int>();
  r.probe.kind = j.at("kind").get<std::string>() == "direct" ? ProbeKind::direct : ProbeKind::indirect;
  if (j.contains("target")) r.probe.target = Address::parse(j.at("target").get<std::string>());
  r.reply.kind = reply_kind_from_string(j.at("reply").get<std::string>());
  r.reply.reply_ttl = j.value("reply_ttl", 0);
  r.reply.observed_at = j.at("observed_at").get<std::uint64_t>();
  r.reply.mpls_labels = j.value("mpls", LabelStack{});
  if (j.contains("responder")) r.reply.responder = Address::parse(j.at("responder").get<std::string>());
  if (j.contains("ip_id")) r.reply.ip_id = j.at("ip_id").get<std::uint16_t>();
  return r;
}

}  // namespace mmlpt
