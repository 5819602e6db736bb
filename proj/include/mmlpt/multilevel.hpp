#pragma once

#include <vector>

#include "json.hpp"
#include "mmlpt/alias.hpp"
#include "mmlpt/collapse.hpp"
#include "mmlpt/mda_lite.hpp"

namespace mmlpt {

struct MultilevelResult {
  LiteTraceResult trace;
  /// One entry per resolved hop, holding its partition after each round.
  std::vector<std::vector<AliasPartition>> partitions;
  RouterGraph router;
  std::vector<ExchangeRecord> log;
};

/// Hops worth resolving: those with at least two responsive addresses.
inline std::vector<int> multi_address_hops(const MultipathGraph& g) {
  std::vector<int> out;
  for (int h = 1; h <= g.max_hop(); ++h) {
    const auto n = std::ranges::count_if(g.layer(h), [](const Vertex& v) { return v.responsive; });
    if (n >= 2) out.push_back(h);
  }
  return out;
}

/// MDA-Lite trace followed by alias resolution of every multi-address hop
/// and the router-level collapse.
inline MultilevelResult multilevel_trace(Prober& prober, const StoppingPoints& sp, const LiteOptions& opts,
                                         const AliasSchedule& sched = {}) {
  RecordingProber rec(prober);
  MultilevelResult out;
  out.trace = mda_lite_trace(rec, sp, opts);
  const std::vector<ExchangeRecord> trace_log = rec.log();
  for (int h : multi_address_hops(out.trace.graph)) {
    out.partitions.push_back(resolve_hop(rec, trace_log, hop_targets(out.trace.graph, h), sched));
  }
  out.router = collapse(out.trace.graph, final_partitions(out.partitions));
  out.log = rec.log();
  return out;
}

/// Replays refinement from a recorded exchange log, as `multilevel_trace`
/// would have computed it.
inline std::vector<std::vector<AliasPartition>> offline_partitions(const MultipathGraph& g,
                                                                   const std::vector<ExchangeRecord>& log,
                                                                   int rounds) {
  std::vector<std::vector<AliasPartition>> out;
  for (int h : multi_address_hops(g)) {
    out.push_back(partitions_from_log(log, hop_targets(g, h).addresses(), h, rounds));
  }
  return out;
}

inline int recorded_rounds(const std::vector<ExchangeRecord>& log) {
  int r = 0;
  for (const auto& e : log) r = std::max(r, e.round);
  return r;
}

inline nlohmann::json partitions_to_json(const std::vector<std::vector<AliasPartition>>& per_hop) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& rounds : per_hop) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& p : rounds) history.push_back(to_json(p));
    out.push_back({{"hop", rounds.empty() ? 0 : rounds.front().hop}, {"rounds", history}});
  }
  return out;
}

inline nlohmann::json to_json(const MultilevelResult& r) {
  auto j = to_json(r.trace);
  j["multilevel"] = {{"partitions", partitions_to_json(r.partitions)}, {"router_level", to_json(r.router)}};
  nlohmann::json replies = nlohmann::json::array();
  for (const auto& e : r.log) replies.push_back(to_json(e));
  j["replies"] = replies;
  return j;
}

}  // namespace mmlpt
