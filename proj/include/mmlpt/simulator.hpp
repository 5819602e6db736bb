#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mmlpt/prober.hpp"
#include "mmlpt/topology.hpp"

namespace mmlpt {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Independent 64-bit seed for the (a, b) child of `seed`.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dull));
}

/// Successor picked by a per-flow load balancer: a keyed hash of
/// (node, flow), uniform over the successors across random flows.
inline std::size_t choose_successor(const SimTopology& t, std::size_t node, FlowId flow, std::uint64_t key) {
  const auto& next = t.successors(node);
  if (next.size() == 1) return next.front();
  const auto h = splitmix64(key ^ splitmix64(node * 0x9e3779b97f4a7c15ull + 1) ^ splitmix64(flow.value));
  const auto pick = static_cast<std::size_t>((static_cast<unsigned __int128>(h) * next.size()) >> 64);
  return next[pick];
}

struct RouteOutcome {
  std::size_t node = 0;
  bool at_destination = false;
};

/// Where an indirect probe expires (or the destination, once reached). Pure
/// in (topology, flow, ttl, key).
inline RouteOutcome route_probe(const SimTopology& t, FlowId flow, int ttl, std::uint64_t key) {
  std::size_t node = t.entry();
  for (int hop = 1; hop < ttl && node != t.destination(); ++hop) node = choose_successor(t, node, flow, key);
  return {node, node == t.destination()};
}

/// In-process Fakeroute backend. The seed keys the load-balancing hash and
/// drives IP-ID offsets, random IP-IDs and response losses. One instance per
/// thread.
class Simulator : public Prober {
 public:
  Simulator(const SimTopology& topology, std::uint64_t seed)
      : topo_(topology), hash_key_(splitmix64(seed ^ 0x5bd1e995u)), rng_(seed) {
    std::uniform_int_distribution<int> offset(0, 0xffff);
    for (std::size_t i = 0; i < topo_.size(); ++i) {
      const auto& n = topo_.node(i);
      if (n.ipid_mode == IpIdMode::shared_monotonic && !router_counter_.contains(n.router)) {
        router_counter_[n.router] = static_cast<std::uint16_t>(offset(rng_));
      }
      interface_counter_.push_back(static_cast<std::uint16_t>(offset(rng_)));
    }
  }

  // The simulator keeps a reference; a temporary topology would dangle.
  Simulator(SimTopology&&, std::uint64_t) = delete;

  const SimTopology& topology() const { return topo_; }
  std::uint64_t hash_key() const { return hash_key_; }

 protected:
  ProbeReply do_send(const Probe& p) override {
    ProbeReply reply;
    reply.observed_at = ++clock_;
    if (p.ttl < 1) return reply;

    std::size_t node = 0;
    if (p.kind == ProbeKind::direct) {
      if (!p.target) return reply;
      const auto idx = topo_.index_of(*p.target);
      if (!idx) return reply;
      node = *idx;
      reply.kind = ReplyKind::echo_reply;
      reply.reply_ttl = topo_.node(node).echo_class() - topo_.hop(node);
    } else {
      const auto out = route_probe(topo_, p.flow, p.ttl, hash_key_);
      node = out.node;
      reply.kind = out.at_destination ? ReplyKind::destination_unreachable : ReplyKind::time_exceeded;
      reply.reply_ttl = topo_.node(node).ttl_class - topo_.hop(node);
      if (topo_.node(node).mpls_label) reply.mpls_labels.push_back(*topo_.node(node).mpls_label);
    }

    const auto& n = topo_.node(node);
    if (n.response_prob < 1.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) >= n.response_prob) {
      ProbeReply lost;
      lost.observed_at = reply.observed_at;
      return lost;
    }
    reply.responder = n.address;
    reply.ip_id = next_ip_id(node);
    return reply;
  }

 private:
  std::uint16_t next_ip_id(std::size_t node) {
    const auto& n = topo_.node(node);
    switch (n.ipid_mode) {
      case IpIdMode::shared_monotonic: return router_counter_[n.router]++;
      case IpIdMode::per_interface_monotonic: return interface_counter_[node]++;
      case IpIdMode::constant_zero: return 0;
      case IpIdMode::random: return static_cast<std::uint16_t>(std::uniform_int_distribution<int>(0, 0xffff)(rng_));
    }
    return 0;
  }

  const SimTopology& topo_;
  std::uint64_t hash_key_;
  std::mt19937_64 rng_;
  std::uint64_t clock_ = 0;
  std::map<std::string, std::uint16_t> router_counter_;
  std::vector<std::uint16_t> interface_counter_;
};

}  // namespace mmlpt
