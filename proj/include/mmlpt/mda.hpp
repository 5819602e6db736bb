#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mmlpt/graph_io.hpp"
#include "mmlpt/stopping.hpp"
#include "mmlpt/trace_state.hpp"

namespace mmlpt {

struct MdaOptions {
  TraceOptions trace;
  /// Fresh-flow attempts allowed per vertex, as a multiple of its budget.
  int attempt_factor = 10;
};

struct UnderExplored {
  int hop = 0;
  Address address;
  int flows_found = 0;
  int flows_needed = 0;
};

struct MdaResult {
  MultipathGraph graph;
  ProbeCounts counts;
  std::vector<UnderExplored> under_explored;
};

/// Classic MDA with node control. Hop 0 stands for the vantage point, whose
/// single "successor set" is hop 1. Vertices are handled FIFO by hop, then
/// in discovery order.
class MdaEngine {
 public:
  MdaEngine(TraceState& state, const StoppingPoints& sp, int attempt_factor = 10)
      : st_(state), sp_(sp), attempt_factor_(attempt_factor) {}

  const std::vector<UnderExplored>& under_explored() const { return under_; }

  /// Makes sure at least `need` flows are known to cross `v` at `hop`
  /// (hop >= 1), probing fresh flows at `hop` as needed. Returns the pool.
  /// New flows landing elsewhere still enlarge their own vertices' pools.
  std::vector<FlowId> node_control_flows(int hop, Address v, int need, ProbePhase phase = ProbePhase::node_control) {
    int attempts = 0;
    const int cap = attempt_factor_ * std::max(need, 1);
    while (static_cast<int>(st_.pool(hop, v).size()) < need) {
      if (st_.graph.width(hop) == 1 && hop >= 1) {
        // Every flow crosses a lone vertex; nothing to verify.
        st_.probe(st_.fresh_flow(), hop, phase);
        continue;
      }
      if (attempts++ >= cap) {
        record_under_explored(hop, v, need);
        break;
      }
      probe_with_link(st_.fresh_flow(), hop, phase);
    }
    return st_.pool(hop, v);
  }

  /// Probes through `v` at hop+1 until the stopping rule is met for the
  /// number of successors found so far.
  void explore_vertex(int hop, Address v, ProbePhase phase = ProbePhase::mda) {
    int attempts = 0;
    for (;;) {
      const int k = hop == 0 ? static_cast<int>(st_.graph.width(1)) : static_cast<int>(st_.graph.out_degree(hop, v));
      const int budget = sp_.at(std::max(k, 1));
      const int sent = probes_through(hop, v);
      if (k > 0 && sent >= budget) return;

      if (hop == 0) {
        st_.probe(st_.fresh_flow(), 1, phase);
        continue;
      }
      if (auto f = unprobed_flow(hop, v)) {
        st_.probe(*f, hop + 1, phase);
        continue;
      }
      if (st_.graph.width(hop) == 1) {
        st_.probe(st_.fresh_flow(), hop + 1, phase);
        continue;
      }
      if (attempts++ >= attempt_factor_ * budget) {
        record_under_explored(hop, v, budget);
        return;
      }
      probe_with_link(st_.fresh_flow(), hop, ProbePhase::node_control);
    }
  }

  /// Explores hops from `start_hop` onward. With `until_single_after` >= 0
  /// the run ends once a single-vertex hop beyond that index is reached.
  /// Returns the last hop whose vertices are known.
  int run_from(int start_hop, int until_single_after = -1) {
    for (int h = start_hop;; ++h) {
      if (h >= st_.options().max_ttl) return h;
      if (h == 0) {
        explore_vertex(0, Address{});
      } else {
        for (std::size_t i = 0; i < st_.graph.width(h); ++i) {
          const Vertex v = st_.graph.layer(h)[i];
          if (!st_.graph.is_destination(v.address)) explore_vertex(h, v.address);
        }
      }
      const int next = h + 1;
      if (st_.graph.width(next) == 0) return h;
      if (st_.should_stop_after(next)) return next;
      if (until_single_after >= 0 && next > until_single_after && st_.graph.width(next) == 1) return next;
    }
  }

 private:
  int probes_through(int hop, Address v) const {
    if (hop == 0) return static_cast<int>(st_.flows_at(1).size());
    int n = 0;
    for (FlowId f : st_.pool(hop, v)) n += st_.probed(f, hop + 1) ? 1 : 0;
    return n;
  }

  std::optional<FlowId> unprobed_flow(int hop, Address v) const {
    for (FlowId f : st_.pool(hop, v)) {
      if (!st_.probed(f, hop + 1)) return f;
    }
    return std::nullopt;
  }

  /// Probes a fresh flow at `hop`; if it reveals a vertex with no known
  /// predecessor, the flow is also traced one hop back to anchor it.
  void probe_with_link(FlowId f, int hop, ProbePhase phase) {
    const Address a = st_.probe(f, hop, phase);
    if (hop >= 2 && st_.graph.in_degree(hop, a) == 0 && !st_.probed(f, hop - 1)) {
      st_.probe(f, hop - 1, phase);
    }
  }

  void record_under_explored(int hop, Address v, int need) {
    for (const auto& u : under_) {
      if (u.hop == hop && u.address == v) return;
    }
    under_.push_back({hop, v, static_cast<int>(st_.pool(hop, v).size()), need});
  }

  TraceState& st_;
  const StoppingPoints& sp_;
  int attempt_factor_;
  std::vector<UnderExplored> under_;
};

inline MdaResult mda_trace(Prober& prober, const StoppingPoints& sp, const MdaOptions& opts = {}) {
  TraceState st(prober, opts.trace);
  MdaEngine engine(st, sp, opts.attempt_factor);
  engine.run_from(0);
  return {st.graph, st.counts, engine.under_explored()};
}

inline nlohmann::json to_json(const MdaResult& r) {
  nlohmann::json under = nlohmann::json::array();
  for (const auto& u : r.under_explored) {
    under.push_back({{"hop", u.hop}, {"address", u.address.to_string()}, {"flows_found", u.flows_found},
                     {"flows_needed", u.flows_needed}});
  }
  return {{"algorithm", "mda"}, {"graph", to_json(r.graph)}, {"probes", to_json(r.counts)},
          {"under_explored", under}};
}

}  // namespace mmlpt
