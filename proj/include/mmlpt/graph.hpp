#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mmlpt/address.hpp"

namespace mmlpt {

struct Vertex {
  Address address;
  int hop = 0;
  bool responsive = true;

  auto operator<=>(const Vertex&) const = default;
};

struct EdgeKey {
  int from_hop = 0;
  Address from;
  Address to;

  auto operator<=>(const EdgeKey&) const = default;
};

struct Edge {
  Vertex from;
  Vertex to;
  std::set<FlowId> witnesses;
};

/// Hop-indexed DAG of interfaces between a source and a destination. Hops are
/// numbered from 1 (the first TTL). Edges only join hop h to hop h+1 and are
/// witnessed by the flows observed at both endpoints.
class MultipathGraph {
 public:
  Address source;
  std::optional<Address> destination;

  int max_hop() const { return static_cast<int>(layers_.size()); }

  std::size_t width(int hop) const {
    return hop >= 1 && hop <= max_hop() ? layers_[hop - 1].size() : 0;
  }

  /// Vertices at a hop in discovery order; empty outside [1, max_hop()].
  const std::vector<Vertex>& layer(int hop) const {
    static const std::vector<Vertex> empty;
    return hop >= 1 && hop <= max_hop() ? layers_[hop - 1] : empty;
  }

  bool contains(int hop, Address a) const { return index_.contains({hop, a}); }

  const Vertex* find(int hop, Address a) const {
    auto it = index_.find({hop, a});
    return it == index_.end() ? nullptr : &layers_[hop - 1][it->second];
  }

  bool is_destination(Address a) const { return destination && *destination == a; }

  /// Returns true when the vertex is new.
  bool add_vertex(int hop, Address a, bool responsive = true) {
    if (hop < 1) throw std::out_of_range("hop index must be >= 1");
    if (index_.contains({hop, a})) return false;
    if (hop > max_hop()) layers_.resize(hop);
    index_[{hop, a}] = layers_[hop - 1].size();
    layers_[hop - 1].push_back(Vertex{a, hop, responsive});
    return true;
  }

  void add_edge(int from_hop, Address from, Address to, FlowId witness) {
    if (!contains(from_hop, from) || !contains(from_hop + 1, to)) {
      throw std::logic_error("edge endpoints must exist at consecutive hops");
    }
    edges_[EdgeKey{from_hop, from, to}].insert(witness);
    succ_[{from_hop, from}].insert(to);
    pred_[{from_hop + 1, to}].insert(from);
  }

  /// Records that `flow` reached `a` at `hop` and links it with the flow's
  /// observations at the neighbouring hops. Returns false (and records
  /// nothing) if the flow was already seen at a different vertex there.
  bool observe(FlowId flow, int hop, Address a, bool responsive = true) {
    auto& path = flow_log_[flow];
    if (auto it = path.find(hop); it != path.end()) return it->second == a;
    add_vertex(hop, a, responsive);
    path[hop] = a;
    if (auto prev = path.find(hop - 1); prev != path.end()) add_edge(hop - 1, prev->second, a, flow);
    if (auto next = path.find(hop + 1); next != path.end()) add_edge(hop, a, next->second, flow);
    return true;
  }

  std::optional<Address> flow_at(FlowId flow, int hop) const {
    auto it = flow_log_.find(flow);
    if (it == flow_log_.end()) return std::nullopt;
    auto jt = it->second.find(hop);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
  }

  const std::set<Address>& successors(int hop, Address a) const { return lookup(succ_, hop, a); }
  const std::set<Address>& predecessors(int hop, Address a) const { return lookup(pred_, hop, a); }
  std::size_t out_degree(int hop, Address a) const { return successors(hop, a).size(); }
  std::size_t in_degree(int hop, Address a) const { return predecessors(hop, a).size(); }

  const std::map<EdgeKey, std::set<FlowId>>& edge_map() const { return edges_; }
  const std::map<FlowId, std::map<int, Address>>& flow_log() const { return flow_log_; }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edges_.size());
    for (const auto& [key, flows] : edges_) {
      out.push_back(Edge{*find(key.from_hop, key.from), *find(key.from_hop + 1, key.to), flows});
    }
    return out;
  }

  std::size_t vertex_count() const { return index_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  std::set<std::pair<int, Address>> vertex_set() const {
    std::set<std::pair<int, Address>> out;
    for (const auto& [key, _] : index_) out.insert(key);
    return out;
  }

  std::set<EdgeKey> edge_set() const {
    std::set<EdgeKey> out;
    for (const auto& [key, _] : edges_) out.insert(key);
    return out;
  }

  /// Same interfaces at the same hops joined by the same edges; witnesses
  /// are ignored.
  bool same_topology(const MultipathGraph& other) const {
    return vertex_set() == other.vertex_set() && edge_set() == other.edge_set();
  }

 private:
  using HopKey = std::pair<int, Address>;

  static const std::set<Address>& lookup(const std::map<HopKey, std::set<Address>>& m, int hop, Address a) {
    static const std::set<Address> empty;
    auto it = m.find({hop, a});
    return it == m.end() ? empty : it->second;
  }

  std::vector<std::vector<Vertex>> layers_;
  std::map<HopKey, std::size_t> index_;
  std::map<EdgeKey, std::set<FlowId>> edges_;
  std::map<HopKey, std::set<Address>> succ_;
  std::map<HopKey, std::set<Address>> pred_;
  std::map<FlowId, std::map<int, Address>> flow_log_;
};

}  // namespace mmlpt
