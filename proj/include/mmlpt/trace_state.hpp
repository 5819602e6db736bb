#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "json.hpp"
#include "mmlpt/graph.hpp"
#include "mmlpt/prober.hpp"

namespace mmlpt {

enum class ProbePhase { discovery, completion, meshing, node_control, mda, single_flow };

inline const char* to_string(ProbePhase p) {
  switch (p) {
    case ProbePhase::discovery: return "discovery";
    case ProbePhase::completion: return "completion";
    case ProbePhase::meshing: return "meshing";
    case ProbePhase::node_control: return "node_control";
    case ProbePhase::mda: return "mda";
    case ProbePhase::single_flow: return "single_flow";
  }
  return "mda";
}

struct ProbeCounts {
  std::map<int, std::uint64_t> per_ttl;
  std::map<ProbePhase, std::uint64_t> per_phase;
  std::uint64_t total = 0;

  std::uint64_t at_ttl(int ttl) const {
    auto it = per_ttl.find(ttl);
    return it == per_ttl.end() ? 0 : it->second;
  }
  std::uint64_t in_phase(ProbePhase p) const {
    auto it = per_phase.find(p);
    return it == per_phase.end() ? 0 : it->second;
  }
};

inline nlohmann::json to_json(const ProbeCounts& c) {
  nlohmann::json per_ttl = nlohmann::json::object();
  for (const auto& [ttl, n] : c.per_ttl) per_ttl[std::to_string(ttl)] = n;
  nlohmann::json per_phase = nlohmann::json::object();
  for (const auto& [phase, n] : c.per_phase) per_phase[to_string(phase)] = n;
  return {{"per_hop", per_ttl}, {"per_phase", per_phase}, {"total", c.total}};
}

struct TraceOptions {
  int max_ttl = 30;
  std::uint32_t trace_id = 0;
  std::uint64_t first_flow = 1;
  /// Stop after this many consecutive hops made only of stars.
  int star_gap_limit = 3;
};

/// Probing state shared by the tracing algorithms: the graph under
/// construction, which flows have been sent at which TTL, and probe
/// accounting. Non-responses at a hop are folded into one star vertex.
class TraceState {
 public:
  TraceState(Prober& prober, TraceOptions opts) : prober_(prober), opts_(opts), next_flow_(opts.first_flow) {}

  MultipathGraph graph;
  ProbeCounts counts;

  const TraceOptions& options() const { return opts_; }
  Prober& prober() { return prober_; }

  FlowId fresh_flow() { return FlowId{next_flow_++}; }

  /// Sends `flow` at `ttl` and records where it landed. When the previous
  /// hop holds a single vertex every flow crosses it, so the flow is
  /// credited to it if it has not been seen there.
  Address probe(FlowId flow, int ttl, ProbePhase phase) {
    const auto reply = prober_.send(Probe{flow, ttl, ProbeKind::indirect, ++probe_id_, std::nullopt});
    ++counts.total;
    ++counts.per_ttl[ttl];
    ++counts.per_phase[phase];

    if (ttl >= 2 && graph.width(ttl - 1) == 1 && !graph.flow_at(flow, ttl - 1)) {
      const auto& only = graph.layer(ttl - 1).front();
      record(flow, ttl - 1, only.address, only.responsive);
    }
    Address where;
    bool responsive = reply.answered() && reply.responder;
    if (responsive) {
      where = *reply.responder;
      if (reply.kind == ReplyKind::destination_unreachable) {
        graph.destination = where;
        destination_hops_[ttl] = true;
      }
    } else {
      where = Address::star(opts_.trace_id, ttl);
    }
    record(flow, ttl, where, responsive);
    return where;
  }

  bool probed(FlowId flow, int hop) const { return graph.flow_at(flow, hop).has_value(); }

  /// Order in which (flow, hop) observations were made, for choosing flows
  /// whose onward hop was not selected with hindsight.
  std::uint64_t seen_order(FlowId flow, int hop) const {
    auto it = order_.find({flow, hop});
    return it == order_.end() ? UINT64_MAX : it->second;
  }

  /// Flows observed at a vertex, in observation order.
  const std::vector<FlowId>& pool(int hop, Address a) const {
    static const std::vector<FlowId> empty;
    auto it = pools_.find({hop, a});
    return it == pools_.end() ? empty : it->second;
  }

  /// Flows observed at a hop, in observation order.
  const std::vector<FlowId>& flows_at(int hop) const {
    static const std::vector<FlowId> empty;
    auto it = by_hop_.find(hop);
    return it == by_hop_.end() ? empty : it->second;
  }

  bool hop_is_destination(int hop) const {
    const auto& layer = graph.layer(hop);
    return !layer.empty() &&
           std::ranges::all_of(layer, [&](const Vertex& v) { return graph.is_destination(v.address); });
  }

  bool hop_is_all_stars(int hop) const {
    const auto& layer = graph.layer(hop);
    return !layer.empty() && std::ranges::none_of(layer, [](const Vertex& v) { return v.responsive; });
  }

  /// True when tracing should not go past `hop`.
  bool should_stop_after(int hop) const {
    if (hop >= opts_.max_ttl || hop_is_destination(hop)) return true;
    int gap = 0;
    for (int h = hop; h >= 1 && hop_is_all_stars(h); --h) ++gap;
    return gap >= opts_.star_gap_limit;
  }

 private:
  void record(FlowId flow, int hop, Address a, bool responsive) {
    if (!graph.observe(flow, hop, a, responsive)) return;
    if (order_.emplace(std::pair{flow, hop}, ++order_clock_).second) {
      pools_[{hop, a}].push_back(flow);
      by_hop_[hop].push_back(flow);
    }
  }

  Prober& prober_;
  TraceOptions opts_;
  std::uint64_t next_flow_;
  std::uint64_t probe_id_ = 0;
  std::uint64_t order_clock_ = 0;
  std::map<std::pair<FlowId, int>, std::uint64_t> order_;
  std::map<std::pair<int, Address>, std::vector<FlowId>> pools_;
  std::map<int, std::vector<FlowId>> by_hop_;
  std::map<int, bool> destination_hops_;
};

}  // namespace mmlpt
