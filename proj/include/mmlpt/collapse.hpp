#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmlpt/alias.hpp"
#include "mmlpt/diamond.hpp"
#include "mmlpt/graph_io.hpp"

namespace mmlpt {

enum class CollapseCase { no_change, single_smaller_diamond, multiple_smaller_diamonds, one_path };

inline const char* to_string(CollapseCase c) {
  switch (c) {
    case CollapseCase::no_change: return "no-change";
    case CollapseCase::single_smaller_diamond: return "single-smaller-diamond";
    case CollapseCase::multiple_smaller_diamonds: return "multiple-smaller-diamonds";
    case CollapseCase::one_path: return "one-path";
  }
  return "no-change";
}

inline constexpr CollapseCase kCollapseCases[] = {CollapseCase::no_change, CollapseCase::single_smaller_diamond,
                                                  CollapseCase::multiple_smaller_diamonds, CollapseCase::one_path};

struct DiamondCollapse {
  DiamondIdentity identity;
  int divergence_hop = 0;
  int convergence_hop = 0;
  CollapseCase outcome = CollapseCase::no_change;
  std::size_t router_diamonds = 0;
};

/// A router-level view of an IP-level graph. Each router vertex is named
/// after the smallest interface address it groups.
struct RouterGraph {
  MultipathGraph graph;
  std::map<std::pair<int, Address>, Address> router_of;
  std::vector<DiamondCollapse> diamonds;
};

/// Alias sets per hop; hops without an entry keep one vertex per address.
using HopPartitions = std::map<int, std::vector<std::set<Address>>>;

inline HopPartitions final_partitions(const std::vector<std::vector<AliasPartition>>& per_hop_rounds) {
  HopPartitions out;
  for (const auto& rounds : per_hop_rounds) {
    if (!rounds.empty()) out[rounds.back().hop] = rounds.back().sets;
  }
  return out;
}

inline RouterGraph collapse(const MultipathGraph& g, const HopPartitions& partitions) {
  RouterGraph rg;
  rg.graph.source = g.source;
  rg.graph.destination = g.destination;
  std::set<int> merged_hops;
  for (int h = 1; h <= g.max_hop(); ++h) {
    std::map<Address, Address> rep;
    if (auto it = partitions.find(h); it != partitions.end()) {
      for (const auto& s : it->second) {
        if (s.empty()) continue;
        for (auto a : s) rep[a] = *s.begin();
        if (s.size() >= 2) {
          const auto present = std::ranges::count_if(s, [&](Address a) { return g.contains(h, a); });
          if (present >= 2) merged_hops.insert(h);
        }
      }
    }
    for (const auto& v : g.layer(h)) {
      const auto it = rep.find(v.address);
      const Address r = it == rep.end() ? v.address : it->second;
      rg.router_of[{h, v.address}] = r;
      rg.graph.add_vertex(h, r, v.responsive);
    }
  }
  for (const auto& [key, flows] : g.edge_map()) {
    const auto from = rg.router_of.at({key.from_hop, key.from});
    const auto to = rg.router_of.at({key.from_hop + 1, key.to});
    for (auto f : flows) rg.graph.add_edge(key.from_hop, from, to, f);
  }
  for (const auto& [flow, path] : g.flow_log()) {
    for (const auto& [hop, a] : path) rg.graph.observe(flow, hop, rg.router_of.at({hop, a}));
  }
  if (g.destination) {
    if (auto it = rg.router_of.find({g.max_hop(), *g.destination}); it != rg.router_of.end()) {
      rg.graph.destination = it->second;
    }
  }

  const auto router_diamonds = extract_diamonds(rg.graph);
  for (const auto& d : extract_diamonds(g)) {
    DiamondCollapse c;
    c.identity = diamond_identity(d);
    c.divergence_hop = d.divergence.hop;
    c.convergence_hop = d.convergence.hop;
    bool merged = false;
    for (int h = d.first_interior_hop(); h <= d.last_interior_hop(); ++h) merged = merged || merged_hops.contains(h);
    for (const auto& rd : router_diamonds) {
      if (rd.divergence.hop >= d.divergence.hop && rd.convergence.hop <= d.convergence.hop) ++c.router_diamonds;
    }
    if (!merged) {
      c.outcome = CollapseCase::no_change;
    } else if (c.router_diamonds == 0) {
      c.outcome = CollapseCase::one_path;
    } else if (c.router_diamonds == 1) {
      c.outcome = CollapseCase::single_smaller_diamond;
    } else {
      c.outcome = CollapseCase::multiple_smaller_diamonds;
    }
    rg.diamonds.push_back(c);
  }
  return rg;
}

inline nlohmann::json to_json(const RouterGraph& rg) {
  nlohmann::json mapping = nlohmann::json::array();
  for (const auto& [key, r] : rg.router_of) {
    mapping.push_back({{"hop", key.first}, {"address", key.second.to_string()}, {"router", r.to_string()}});
  }
  nlohmann::json diamonds = nlohmann::json::array();
  for (const auto& d : rg.diamonds) {
    diamonds.push_back({{"divergence", d.identity.first.to_string()},
                        {"convergence", d.identity.second.to_string()},
                        {"divergence_hop", d.divergence_hop},
                        {"convergence_hop", d.convergence_hop},
                        {"router_diamonds", d.router_diamonds},
                        {"outcome", to_string(d.outcome)}});
  }
  return {{"graph", to_json(rg.graph)}, {"mapping", mapping}, {"diamonds", diamonds}};
}

}  // namespace mmlpt
