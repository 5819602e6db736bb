#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmlpt/diamond.hpp"
#include "mmlpt/mda.hpp"

namespace mmlpt {

struct MeshingTestConfig {
  int phi = 2;

  void validate() const {
    if (phi < 2) throw std::invalid_argument("phi must be >= 2");
  }
};

enum class SwitchReason { meshing, asymmetry };

inline const char* to_string(SwitchReason r) { return r == SwitchReason::meshing ? "meshing" : "asymmetry"; }

enum class MeshingDirection { forward, backward, observed };

inline const char* to_string(MeshingDirection d) {
  switch (d) {
    case MeshingDirection::forward: return "forward";
    case MeshingDirection::backward: return "backward";
    case MeshingDirection::observed: return "observed";
  }
  return "forward";
}

struct MeshingTestRecord {
  int hop = 0;  // pair (hop, hop+1)
  MeshingDirection direction = MeshingDirection::forward;
  std::uint64_t probes = 0;
  bool meshed = false;
  bool new_vertex = false;
};

struct SwitchEvent {
  int trigger_hop = 0;  // first hop of the offending pair
  int divergence_hop = 0;
  int convergence_hop = -1;  // -1 when the trace ended inside the diamond
  SwitchReason reason = SwitchReason::meshing;
};

struct LiteTraceResult {
  MultipathGraph graph;
  ProbeCounts counts;
  std::map<int, std::uint64_t> discovery_per_hop;
  std::vector<SwitchEvent> switches;
  std::vector<MeshingTestRecord> meshing_tests;
  std::vector<UnderExplored> under_explored;

  bool switched_to_mda() const { return !switches.empty(); }

  std::uint64_t discovery_probes() const {
    std::uint64_t n = 0;
    for (const auto& [_, c] : discovery_per_hop) n += c;
    return n;
  }
};

struct LiteOptions {
  TraceOptions trace;
  MeshingTestConfig meshing;
  int attempt_factor = 10;
  /// Re-scans of a hop triggered by vertices found outside discovery.
  int max_rescans = 4;
};

/// MDA-Lite: hop-by-hop discovery without node control, then edge
/// completion, the meshing test and the asymmetry test on each new hop
/// pair. A positive test hands the enclosing diamond to the full MDA once
/// its convergence point has been found.
class LiteEngine {
 public:
  LiteEngine(TraceState& state, const StoppingPoints& sp, LiteOptions opts)
      : st_(state), sp_(sp), opts_(opts), mda_(state, sp, opts.attempt_factor) {
    opts_.meshing.validate();
  }

  const std::map<int, std::uint64_t>& discovery_per_hop() const { return discovery_; }
  const std::vector<SwitchEvent>& switches() const { return switches_; }
  const std::vector<MeshingTestRecord>& meshing_tests() const { return meshing_; }
  const MdaEngine& mda() const { return mda_; }

  /// Probes at `hop` until the number of discovery probes reaches n_w for
  /// the w vertices seen there. Flows come first one per vertex of the
  /// previous hop, then any other flow seen there, then fresh ones.
  void discover_hop(int hop) {
    for (;;) {
      const auto w = st_.graph.width(hop);
      if (w > 0 && discovery_[hop] >= static_cast<std::uint64_t>(sp_.at(static_cast<int>(w)))) return;
      st_.probe(next_discovery_flow(hop), hop, ProbePhase::discovery);
      ++discovery_[hop];
    }
  }

  /// Gives every vertex of the pair at least one incident edge, tracing
  /// forward from successor-less vertices at `i` and backward from
  /// predecessor-less ones at i+1. Returns true if a new vertex turned up.
  bool complete_edges(int i) {
    if (i < 1 || st_.graph.width(i + 1) == 0) return false;
    const auto before_i = st_.graph.width(i);
    const auto before_j = st_.graph.width(i + 1);
    const bool forward_first = before_j <= before_i;
    const bool backward_first = before_j >= before_i;
    if (forward_first) trace_forward(i);
    if (backward_first) trace_backward(i);
    // Whatever is still orphaned gets the other direction too.
    trace_forward(i);
    trace_backward(i);
    return st_.graph.width(i) != before_i || st_.graph.width(i + 1) != before_j;
  }

  /// Traces phi flows per vertex from the wider hop of the pair (forward
  /// when widths tie) and reports meshing if any such vertex reaches two
  /// or more vertices at the other hop. Only flows whose observation at the
  /// source hop came first are used, so none was picked for where it went.
  MeshingTestRecord meshing_test(int i) {
    const auto wi = st_.graph.width(i);
    const auto wj = st_.graph.width(i + 1);
    if (wi < 2 || wj < 2) throw std::invalid_argument("meshing test needs two multi-vertex hops");
    const std::uint64_t start = st_.counts.total;
    MeshingTestRecord rec;
    rec.hop = i;
    rec.direction = wi >= wj ? MeshingDirection::forward : MeshingDirection::backward;
    const int src = rec.direction == MeshingDirection::forward ? i : i + 1;
    const int dst = rec.direction == MeshingDirection::forward ? i + 1 : i;
    const auto dst_width = st_.graph.width(dst);

    const std::vector<Vertex> sources = st_.graph.layer(src);
    for (const auto& v : sources) {
      std::vector<FlowId> chosen = unbiased_flows(src, dst, v.address);
      int attempts = 0;
      while (static_cast<int>(chosen.size()) < opts_.meshing.phi &&
             attempts++ < opts_.attempt_factor * opts_.meshing.phi) {
        const FlowId f = st_.fresh_flow();
        if (st_.probe(f, src, ProbePhase::meshing) == v.address) chosen.push_back(f);
      }
      std::set<Address> reached;
      for (FlowId f : chosen) {
        if (!st_.probed(f, dst)) st_.probe(f, dst, ProbePhase::meshing);
        reached.insert(*st_.graph.flow_at(f, dst));
      }
      if (reached.size() >= 2) rec.meshed = true;
    }
    rec.new_vertex = st_.graph.width(src) != sources.size() || st_.graph.width(dst) != dst_width;
    rec.probes = st_.counts.total - start;
    return rec;
  }

  /// Successor counts at `i` or predecessor counts at i+1 that are not all
  /// equal indicate a non-uniform diamond.
  bool asymmetry_test(int i) const {
    auto spread = [](const std::vector<std::size_t>& xs) {
      return !xs.empty() && std::ranges::minmax(xs).min != std::ranges::minmax(xs).max;
    };
    std::vector<std::size_t> out, in;
    for (const auto& v : st_.graph.layer(i)) out.push_back(st_.graph.out_degree(i, v.address));
    for (const auto& v : st_.graph.layer(i + 1)) in.push_back(st_.graph.in_degree(i + 1, v.address));
    return spread(out) || spread(in);
  }

  void run() {
    std::optional<SwitchEvent> pending;
    int last_single = 0;  // the vantage point counts as a single-vertex hop 0
    for (int h = 1; h <= st_.options().max_ttl; ++h) {
      discover_hop(h);
      if (h >= 2) settle_pair(h - 1);

      if (!pending && h >= 2) {
        if (auto reason = detect(h - 1)) pending = SwitchEvent{h - 1, last_single, -1, *reason};
      }

      if (st_.graph.width(h) == 1) {
        if (pending) {
          const int stop = mda_.run_from(pending->divergence_hop, pending->trigger_hop);
          pending->convergence_hop = st_.graph.width(stop) == 1 ? stop : -1;
          switches_.push_back(*pending);
          pending.reset();
          h = std::max(h, stop);
          if (st_.graph.width(h) == 0 || st_.should_stop_after(h)) break;
        }
        last_single = h;
      }
      if (st_.should_stop_after(h)) break;
    }
    if (pending) {
      mda_.run_from(pending->divergence_hop);
      switches_.push_back(*pending);
    }
  }

 private:
  FlowId next_discovery_flow(int hop) {
    if (hop >= 2) {
      for (const auto& v : st_.graph.layer(hop - 1)) {
        const auto& pool = st_.pool(hop - 1, v.address);
        const bool has_one = std::ranges::any_of(pool, [&](FlowId f) { return st_.probed(f, hop); });
        if (has_one) continue;
        for (FlowId f : pool) {
          if (!st_.probed(f, hop)) return f;
        }
      }
      for (FlowId f : st_.flows_at(hop - 1)) {
        if (!st_.probed(f, hop)) return f;
      }
    }
    return st_.fresh_flow();
  }

  void trace_forward(int i) {
    const std::vector<Vertex> layer = st_.graph.layer(i);
    for (const auto& v : layer) {
      if (st_.graph.is_destination(v.address) || st_.graph.out_degree(i, v.address) > 0) continue;
      for (FlowId f : st_.pool(i, v.address)) {
        if (!st_.probed(f, i + 1)) {
          st_.probe(f, i + 1, ProbePhase::completion);
          break;
        }
      }
    }
  }

  void trace_backward(int i) {
    const std::vector<Vertex> layer = st_.graph.layer(i + 1);
    for (const auto& v : layer) {
      if (st_.graph.in_degree(i + 1, v.address) > 0) continue;
      for (FlowId f : st_.pool(i + 1, v.address)) {
        if (!st_.probed(f, i)) {
          st_.probe(f, i, ProbePhase::completion);
          break;
        }
      }
    }
  }

  /// Edge completion on (i, i+1) with hop re-scans when it finds vertices
  /// the stopping rule had missed.
  void settle_pair(int i) {
    for (int round = 0; round < opts_.max_rescans; ++round) {
      const auto wi = st_.graph.width(i);
      const auto wj = st_.graph.width(i + 1);
      if (!complete_edges(i)) return;
      if (st_.graph.width(i) != wi) {
        discover_hop(i);
        if (i >= 2) complete_edges(i - 1);
      }
      if (st_.graph.width(i + 1) != wj) discover_hop(i + 1);
    }
  }

  std::optional<SwitchReason> detect(int i) {
    if (st_.graph.width(i) >= 2 && st_.graph.width(i + 1) >= 2) {
      if (is_meshed_hop_pair(st_.graph, i)) {
        meshing_.push_back({i, MeshingDirection::observed, 0, true, false});
        return SwitchReason::meshing;
      }
      auto rec = meshing_test(i);
      meshing_.push_back(rec);
      if (rec.new_vertex) settle_pair(i);
      if (rec.meshed) return SwitchReason::meshing;
    }
    if (asymmetry_test(i)) return SwitchReason::asymmetry;
    return std::nullopt;
  }

  TraceState& st_;
  const StoppingPoints& sp_;
  LiteOptions opts_;
  MdaEngine mda_;
  std::map<int, std::uint64_t> discovery_;
  std::vector<SwitchEvent> switches_;
  std::vector<MeshingTestRecord> meshing_;

  std::vector<FlowId> unbiased_flows(int src, int dst, Address v) const {
    std::vector<FlowId> out;
    for (FlowId f : st_.pool(src, v)) {
      if (static_cast<int>(out.size()) >= opts_.meshing.phi) break;
      if (!st_.probed(f, dst) || st_.seen_order(f, src) < st_.seen_order(f, dst)) out.push_back(f);
    }
    return out;
  }
};

inline LiteTraceResult mda_lite_trace(Prober& prober, const StoppingPoints& sp, const LiteOptions& opts = {}) {
  TraceState st(prober, opts.trace);
  LiteEngine engine(st, sp, opts);
  engine.run();
  return {st.graph, st.counts, engine.discovery_per_hop(), engine.switches(), engine.meshing_tests(),
          engine.mda().under_explored()};
}

/// Classic single-flow traceroute: one flow identifier, one probe per hop.
inline MdaResult single_flow_trace(Prober& prober, const TraceOptions& opts = {}) {
  TraceState st(prober, opts);
  const FlowId f = st.fresh_flow();
  for (int h = 1; h <= opts.max_ttl; ++h) {
    st.probe(f, h, ProbePhase::single_flow);
    if (st.should_stop_after(h)) break;
  }
  return {st.graph, st.counts, {}};
}

inline nlohmann::json to_json(const LiteTraceResult& r) {
  nlohmann::json switches = nlohmann::json::array();
  for (const auto& s : r.switches) {
    switches.push_back({{"trigger_hop", s.trigger_hop},
                        {"divergence_hop", s.divergence_hop},
                        {"convergence_hop", s.convergence_hop},
                        {"reason", to_string(s.reason)}});
  }
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : r.meshing_tests) {
    tests.push_back({{"hop_pair", {t.hop, t.hop + 1}},
                     {"direction", to_string(t.direction)},
                     {"probes", t.probes},
                     {"outcome", t.meshed ? "meshed" : "not-detected"}});
  }
  nlohmann::json disc = nlohmann::json::object();
  for (const auto& [h, n] : r.discovery_per_hop) disc[std::to_string(h)] = n;
  return {{"algorithm", "mda-lite"},
          {"graph", to_json(r.graph)},
          {"probes", to_json(r.counts)},
          {"discovery_per_hop", disc},
          {"switched_to_mda", r.switched_to_mda()},
          {"switches", switches},
          {"meshing_tests", tests}};
}

}  // namespace mmlpt
