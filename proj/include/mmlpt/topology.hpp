#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mmlpt/address.hpp"
#include "mmlpt/graph.hpp"

namespace mmlpt {

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Balancing { none, per_flow_uniform };

enum class IpIdMode { shared_monotonic, per_interface_monotonic, constant_zero, random };

inline constexpr int kTtlClasses[] = {32, 64, 128, 255};

inline bool is_ttl_class(int v) { return std::ranges::find(kTtlClasses, v) != std::end(kTtlClasses); }

struct SimNode {
  Address address;
  std::string router;  // nodes sharing a router id are aliases
  Balancing balancing = Balancing::none;
  IpIdMode ipid_mode = IpIdMode::shared_monotonic;
  int ttl_class = 64;
  std::optional<int> echo_ttl_class;  // defaults to ttl_class
  std::optional<std::uint32_t> mpls_label;
  double response_prob = 1.0;

  int echo_class() const { return echo_ttl_class.value_or(ttl_class); }
};

/// Ground-truth topology: a DAG layered by hop distance from the entry node
/// (hop 1) down to the destination, which is the only sink.
class SimTopology {
 public:
  static SimTopology build(std::vector<SimNode> nodes, const std::vector<std::pair<Address, Address>>& edges,
                           Address source, Address destination) {
    SimTopology t;
    t.source_ = source;
    t.nodes_ = std::move(nodes);
    if (t.nodes_.empty()) throw TopologyError("topology has no nodes");
    for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
      auto& n = t.nodes_[i];
      if (!t.index_.emplace(n.address, i).second) {
        throw TopologyError("duplicate node address " + n.address.to_string());
      }
      if (n.router.empty()) n.router = n.address.to_string();
      if (!is_ttl_class(n.ttl_class) || (n.echo_ttl_class && !is_ttl_class(*n.echo_ttl_class))) {
        throw TopologyError("ttl class must be one of 32, 64, 128, 255 at " + n.address.to_string());
      }
      if (!(n.response_prob >= 0.0 && n.response_prob <= 1.0)) {
        throw TopologyError("response_prob outside [0,1] at " + n.address.to_string());
      }
      if (n.mpls_label && *n.mpls_label >= (1u << 20)) {
        throw TopologyError("MPLS label exceeds 20 bits at " + n.address.to_string());
      }
    }
    const auto n = t.nodes_.size();
    t.succ_.assign(n, {});
    t.pred_.assign(n, {});
    for (const auto& [from, to] : edges) {
      const auto a = t.require(from), b = t.require(to);
      if (std::ranges::find(t.succ_[a], b) != t.succ_[a].end()) {
        throw TopologyError("duplicate edge " + from.to_string() + " -> " + to.to_string());
      }
      t.succ_[a].push_back(b);
      t.pred_[b].push_back(a);
    }
    t.destination_ = t.require(destination);

    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < n; ++i) {
      if (t.pred_[i].empty()) roots.push_back(i);
    }
    if (roots.size() != 1) throw TopologyError("topology must have exactly one entry node");
    t.entry_ = roots.front();

    // Kahn's algorithm for cycle detection, then hop layering.
    std::vector<std::size_t> indeg(n), order;
    for (std::size_t i = 0; i < n; ++i) indeg[i] = t.pred_[i].size();
    std::queue<std::size_t> ready;
    ready.push(t.entry_);
    while (!ready.empty()) {
      const auto u = ready.front();
      ready.pop();
      order.push_back(u);
      for (auto v : t.succ_[u]) {
        if (--indeg[v] == 0) ready.push(v);
      }
    }
    if (order.size() != n) throw TopologyError("topology contains a cycle");

    t.hop_.assign(n, 0);
    t.hop_[t.entry_] = 1;
    for (auto u : order) {
      for (auto v : t.succ_[u]) {
        if (t.hop_[v] == 0) {
          t.hop_[v] = t.hop_[u] + 1;
        } else if (t.hop_[v] != t.hop_[u] + 1) {
          throw TopologyError("paths of unequal length reach " + t.nodes_[v].address.to_string());
        }
      }
    }

    std::vector<bool> reaches(n, false);
    reaches[t.destination_] = true;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      for (auto v : t.succ_[*it]) reaches[*it] = reaches[*it] || reaches[v];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = t.nodes_[i];
      if (!reaches[i]) throw TopologyError("destination unreachable from " + node.address.to_string());
      if (i != t.destination_ && t.succ_[i].empty()) {
        throw TopologyError("non-destination sink " + node.address.to_string());
      }
      if (node.balancing == Balancing::per_flow_uniform && t.succ_[i].size() < 2) {
        throw TopologyError("per-flow balancer with fewer than 2 successors at " + node.address.to_string());
      }
      if (node.balancing == Balancing::none && t.succ_[i].size() >= 2) {
        throw TopologyError("multiple successors without load balancing at " + node.address.to_string());
      }
      if (node.ttl_class - t.hop_[i] < 1 || node.echo_class() - t.hop_[i] < 1) {
        throw TopologyError("initial TTL too small for hop distance at " + node.address.to_string());
      }
    }
    if (!t.succ_[t.destination_].empty()) throw TopologyError("destination must not have successors");
    return t;
  }

  std::size_t size() const { return nodes_.size(); }
  const SimNode& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<SimNode>& nodes() const { return nodes_; }
  const std::vector<std::size_t>& successors(std::size_t i) const { return succ_.at(i); }
  const std::vector<std::size_t>& predecessors(std::size_t i) const { return pred_.at(i); }
  int hop(std::size_t i) const { return hop_.at(i); }
  std::size_t entry() const { return entry_; }
  std::size_t destination() const { return destination_; }
  Address source() const { return source_; }
  Address destination_address() const { return nodes_[destination_].address; }
  int depth() const { return hop_[destination_]; }

  std::optional<std::size_t> index_of(Address a) const {
    auto it = index_.find(a);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::pair<Address, Address>> edge_list() const {
    std::vector<std::pair<Address, Address>> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (auto j : succ_[i]) out.emplace_back(nodes_[i].address, nodes_[j].address);
    }
    return out;
  }

  /// The IP-level graph a perfect trace would discover. Witness sets are
  /// left empty.
  MultipathGraph ground_truth() const {
    MultipathGraph g;
    g.source = source_;
    g.destination = destination_address();
    for (int h = 1; h <= depth(); ++h) {
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (hop_[i] == h) g.add_vertex(h, nodes_[i].address, true);
      }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (auto j : succ_[i]) g.add_edge(hop_[i], nodes_[i].address, nodes_[j].address, FlowId{0});
    }
    return g;
  }

  bool all_responsive() const {
    return std::ranges::all_of(nodes_, [](const SimNode& n) { return n.response_prob == 1.0; });
  }

 private:
  std::size_t require(Address a) const {
    auto it = index_.find(a);
    if (it == index_.end()) throw TopologyError("edge references unknown node " + a.to_string());
    return it->second;
  }

  Address source_;
  std::vector<SimNode> nodes_;
  std::map<Address, std::size_t> index_;
  std::vector<std::vector<std::size_t>> succ_, pred_;
  std::vector<int> hop_;
  std::size_t entry_ = 0;
  std::size_t destination_ = 0;
};

inline const char* to_string(IpIdMode m) {
  switch (m) {
    case IpIdMode::shared_monotonic: return "shared-monotonic";
    case IpIdMode::per_interface_monotonic: return "per-interface-monotonic";
    case IpIdMode::constant_zero: return "constant-zero";
    case IpIdMode::random: return "random";
  }
  return "shared-monotonic";
}

inline IpIdMode ipid_mode_from_string(const std::string& s) {
  if (s == "shared-monotonic") return IpIdMode::shared_monotonic;
  if (s == "per-interface-monotonic") return IpIdMode::per_interface_monotonic;
  if (s == "constant-zero") return IpIdMode::constant_zero;
  if (s == "random") return IpIdMode::random;
  throw TopologyError("unknown ipid_mode: " + s);
}

/// Topology JSON: {nodes:[{addr, router, balancing, ipid_mode, ttl_class,
/// echo_ttl_class, mpls, response_prob}], edges:[[from,to]], source,
/// destination}. `source` is the vantage point address; the entry node is
/// the unique node without predecessors. Only `addr` is required per node;
/// `balancing` defaults to per-flow-uniform when a node has several
/// successors.
inline SimTopology topology_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw TopologyError("topology document must be an object");
    std::vector<std::pair<Address, Address>> edges;
    std::map<Address, int> out_count;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw TopologyError("edges must be [from, to] pairs");
      edges.emplace_back(Address::parse(e[0].get<std::string>()), Address::parse(e[1].get<std::string>()));
      ++out_count[edges.back().first];
    }
    std::vector<SimNode> nodes;
    for (const auto& jn : j.at("nodes")) {
      SimNode n;
      n.address = Address::parse(jn.at("addr").get<std::string>());
      n.router = jn.value("router", std::string{});
      if (jn.contains("balancing")) {
        const auto b = jn.at("balancing").get<std::string>();
        if (b == "per-flow-uniform") {
          n.balancing = Balancing::per_flow_uniform;
        } else if (b == "none") {
          n.balancing = Balancing::none;
        } else {
          throw TopologyError("unknown balancing: " + b);
        }
      } else {
        n.balancing = out_count[n.address] >= 2 ? Balancing::per_flow_uniform : Balancing::none;
      }
      if (jn.contains("ipid_mode")) n.ipid_mode = ipid_mode_from_string(jn.at("ipid_mode").get<std::string>());
      n.ttl_class = jn.value("ttl_class", 64);
      if (jn.contains("echo_ttl_class") && !jn.at("echo_ttl_class").is_null()) {
        n.echo_ttl_class = jn.at("echo_ttl_class").get<int>();
      }
      if (jn.contains("mpls") && !jn.at("mpls").is_null()) n.mpls_label = jn.at("mpls").get<std::uint32_t>();
      n.response_prob = jn.value("response_prob", 1.0);
      nodes.push_back(std::move(n));
    }
    return SimTopology::build(std::move(nodes), edges, Address::parse(j.at("source").get<std::string>()),
                              Address::parse(j.at("destination").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw TopologyError(std::string("topology schema violation: ") + e.what());
  } catch (const AddressError& e) {
    throw TopologyError(std::string("topology schema violation: ") + e.what());
  }
}

inline nlohmann::json to_json(const SimTopology& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes()) {
    nlohmann::json jn{{"addr", n.address.to_string()},
                      {"router", n.router},
                      {"balancing", n.balancing == Balancing::per_flow_uniform ? "per-flow-uniform" : "none"},
                      {"ipid_mode", to_string(n.ipid_mode)},
                      {"ttl_class", n.ttl_class},
                      {"mpls", n.mpls_label ? nlohmann::json(*n.mpls_label) : nlohmann::json(nullptr)},
                      {"response_prob", n.response_prob}};
    if (n.echo_ttl_class) jn["echo_ttl_class"] = *n.echo_ttl_class;
    nodes.push_back(std::move(jn));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : t.edge_list()) edges.push_back({a.to_string(), b.to_string()});
  return {{"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"source", t.source().to_string()},
          {"destination", t.destination_address().to_string()}};
}

inline SimTopology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot open topology file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw TopologyError("topology schema violation: " + std::string(e.what()));
  }
  return topology_from_json(j);
}

}  // namespace mmlpt
