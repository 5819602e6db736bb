#pragma once

#include <sstream>
#include <string>

#include "json.hpp"
#include "mmlpt/diamond.hpp"
#include "mmlpt/graph.hpp"

namespace mmlpt {

using json = nlohmann::json;

inline json flows_to_json(const std::set<FlowId>& flows) {
  json out = json::array();
  for (const auto& f : flows) out.push_back(f.value);
  return out;
}

/// {source, destination, hops:[[{address, responsive, flows}]],
///  edges:[{from_hop, from_addr, to_addr, flows}]}
inline json to_json(const MultipathGraph& g) {
  json hops = json::array();
  std::map<std::pair<int, Address>, std::set<FlowId>> seen;
  for (const auto& [flow, path] : g.flow_log()) {
    for (const auto& [hop, addr] : path) seen[{hop, addr}].insert(flow);
  }
  for (int h = 1; h <= g.max_hop(); ++h) {
    json layer = json::array();
    for (const auto& v : g.layer(h)) {
      layer.push_back({{"address", v.address.to_string()},
                       {"responsive", v.responsive},
                       {"flows", flows_to_json(seen[{h, v.address}])}});
    }
    hops.push_back(std::move(layer));
  }
  json edges = json::array();
  for (const auto& [key, flows] : g.edge_map()) {
    edges.push_back({{"from_hop", key.from_hop},
                     {"from_addr", key.from.to_string()},
                     {"to_addr", key.to.to_string()},
                     {"flows", flows_to_json(flows)}});
  }
  return {{"source", g.source.to_string()},
          {"destination", g.destination ? json(g.destination->to_string()) : json(nullptr)},
          {"hops", std::move(hops)},
          {"edges", std::move(edges)}};
}

inline MultipathGraph graph_from_json(const json& j) {
  MultipathGraph g;
  g.source = Address::parse(j.at("source").get<std::string>());
  if (j.contains("destination") && !j.at("destination").is_null()) {
    g.destination = Address::parse(j.at("destination").get<std::string>());
  }
  const auto& hops = j.at("hops");
  for (std::size_t i = 0; i < hops.size(); ++i) {
    const int hop = static_cast<int>(i) + 1;
    for (const auto& v : hops[i]) {
      const auto addr = Address::parse(v.at("address").get<std::string>());
      const bool responsive = v.value("responsive", true);
      g.add_vertex(hop, addr, responsive);
      if (v.contains("flows")) {
        for (const auto& f : v.at("flows")) g.observe(FlowId{f.get<std::uint64_t>()}, hop, addr, responsive);
      }
    }
  }
  for (const auto& e : j.at("edges")) {
    const int hop = e.at("from_hop").get<int>();
    const auto from = Address::parse(e.at("from_addr").get<std::string>());
    const auto to = Address::parse(e.at("to_addr").get<std::string>());
    for (const auto& f : e.at("flows")) g.add_edge(hop, from, to, FlowId{f.get<std::uint64_t>()});
  }
  return g;
}

inline std::string dot_id(const std::string& prefix, const Vertex& v) {
  return "\"" + prefix + v.address.to_string() + "@" + std::to_string(v.hop) + "\"";
}

/// Writes the graph body (no enclosing digraph) so that several graphs can
/// be rendered side by side. Interior vertices of each diamond go into their
/// own cluster; endpoints stay at top level since consecutive diamonds share
/// them.
inline void write_dot_body(std::ostream& os, const MultipathGraph& g, const std::string& prefix,
                           const std::string& indent = "  ") {
  std::set<std::pair<int, Address>> clustered;
  const auto diamonds = extract_diamonds(g);
  for (std::size_t i = 0; i < diamonds.size(); ++i) {
    const auto& d = diamonds[i];
    os << indent << "subgraph \"cluster_" << prefix << "diamond_" << i << "\" {\n";
    os << indent << "  label=\"" << d.divergence.address.to_string() << " -> " << d.convergence.address.to_string()
       << "\";\n";
    for (int h = d.first_interior_hop(); h <= d.last_interior_hop(); ++h) {
      for (const auto& v : g.layer(h)) {
        os << indent << "  " << dot_id(prefix, v) << ";\n";
        clustered.insert({h, v.address});
      }
    }
    os << indent << "}\n";
  }
  for (int h = 1; h <= g.max_hop(); ++h) {
    for (const auto& v : g.layer(h)) {
      if (clustered.contains({h, v.address})) continue;
      os << indent << dot_id(prefix, v);
      if (!v.responsive) os << " [shape=box, style=dashed]";
      os << ";\n";
    }
  }
  for (const auto& [key, flows] : g.edge_map()) {
    os << indent << dot_id(prefix, *g.find(key.from_hop, key.from)) << " -> "
       << dot_id(prefix, *g.find(key.from_hop + 1, key.to)) << ";\n";
  }
}

inline std::string to_dot(const MultipathGraph& g, const std::string& name = "multipath") {
  std::ostringstream os;
  os << "digraph \"" << name << "\" {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  write_dot_body(os, g, "");
  os << "}\n";
  return os.str();
}

}  // namespace mmlpt
