#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mmlpt/graph.hpp"

namespace mmlpt {

/// A load-balanced region delimited by a divergence and a convergence point.
/// `span` holds the hops from divergence to convergence inclusive, with the
/// original hop numbers, so the endpoints take part in hop-pair metrics.
struct Diamond {
  Vertex divergence;
  Vertex convergence;
  MultipathGraph span;

  int first_interior_hop() const { return divergence.hop + 1; }
  int last_interior_hop() const { return convergence.hop - 1; }
};

struct DiamondMetrics {
  std::size_t max_width = 1;
  int max_length = 2;
  std::size_t max_width_asymmetry = 0;
  std::size_t meshed_hop_pairs = 0;
  std::size_t hop_pairs = 0;

  double meshed_hop_ratio() const {
    return hop_pairs == 0 ? 0.0 : static_cast<double>(meshed_hop_pairs) / static_cast<double>(hop_pairs);
  }

  auto operator<=>(const DiamondMetrics&) const = default;
};

/// Diamonds are keyed by their endpoints only; a star endpoint never equals
/// a responsive one because star addresses are synthetic.
using DiamondIdentity = std::pair<Address, Address>;

inline DiamondIdentity diamond_identity(const Diamond& d) {
  return {d.divergence.address, d.convergence.address};
}

// Every flow crosses exactly one vertex per hop, so the points all flows
// share are exactly the single-vertex hops. Diamonds are therefore the
// maximal runs of multi-vertex hops bounded by single-vertex hops, which also
// makes them outermost by construction.
inline std::vector<Diamond> extract_diamonds(const MultipathGraph& g) {
  std::vector<Diamond> out;
  const int last = g.max_hop();
  for (int h = 1; h < last; ++h) {
    if (g.width(h) != 1 || g.width(h + 1) < 2) continue;
    int c = h + 1;
    while (c <= last && g.width(c) >= 2) ++c;
    if (c > last) break;
    if (g.width(c) != 1) {
      h = c;
      continue;
    }

    Diamond d{g.layer(h).front(), g.layer(c).front(), {}};
    d.span.source = g.source;
    d.span.destination = g.destination;
    for (int k = h; k <= c; ++k) {
      for (const auto& v : g.layer(k)) d.span.add_vertex(v.hop, v.address, v.responsive);
    }
    for (const auto& [key, flows] : g.edge_map()) {
      if (key.from_hop < h || key.from_hop >= c) continue;
      for (const auto& f : flows) d.span.add_edge(key.from_hop, key.from, key.to, f);
    }
    out.push_back(std::move(d));
    h = c - 1;
  }
  return out;
}

inline void require_hop_pair(const MultipathGraph& g, int i) {
  if (g.width(i) == 0 || g.width(i + 1) == 0) {
    throw std::out_of_range("hop pair (" + std::to_string(i) + ", " + std::to_string(i + 1) + ") does not exist");
  }
}

inline bool is_meshed_hop_pair(const MultipathGraph& g, int i) {
  require_hop_pair(g, i);
  const auto wi = g.width(i);
  const auto wj = g.width(i + 1);
  auto any_out = [&] {
    return std::ranges::any_of(g.layer(i), [&](const Vertex& v) { return g.out_degree(i, v.address) >= 2; });
  };
  auto any_in = [&] {
    return std::ranges::any_of(g.layer(i + 1), [&](const Vertex& v) { return g.in_degree(i + 1, v.address) >= 2; });
  };
  if (wi == wj) return any_out() || any_in();
  return wi < wj ? any_in() : any_out();
}

namespace detail {

template <typename Degree>
std::size_t degree_spread(const std::vector<Vertex>& layer, Degree degree) {
  if (layer.size() < 2) return 0;
  std::size_t lo = degree(layer.front()), hi = lo;
  for (const auto& v : layer) {
    lo = std::min(lo, degree(v));
    hi = std::max(hi, degree(v));
  }
  return hi - lo;
}

}  // namespace detail

/// Width asymmetry of one hop pair: successor spread at hop i when it is the
/// narrower hop, predecessor spread at hop i+1 when it is, both when equal.
/// A pair touching a single-vertex hop has no asymmetry.
inline std::size_t hop_pair_asymmetry(const MultipathGraph& g, int i) {
  require_hop_pair(g, i);
  const auto wi = g.width(i);
  const auto wj = g.width(i + 1);
  if (wi < 2 || wj < 2) return 0;
  const auto succ = detail::degree_spread(g.layer(i), [&](const Vertex& v) { return g.out_degree(i, v.address); });
  const auto pred =
      detail::degree_spread(g.layer(i + 1), [&](const Vertex& v) { return g.in_degree(i + 1, v.address); });
  if (wi < wj) return succ;
  if (wi > wj) return pred;
  return std::max(succ, pred);
}

inline DiamondMetrics compute_metrics(const Diamond& d) {
  DiamondMetrics m;
  const auto& g = d.span;
  m.max_length = d.convergence.hop - d.divergence.hop;
  for (int h = d.divergence.hop; h <= d.convergence.hop; ++h) m.max_width = std::max(m.max_width, g.width(h));
  for (int i = d.divergence.hop; i < d.convergence.hop; ++i) {
    ++m.hop_pairs;
    if (is_meshed_hop_pair(g, i)) ++m.meshed_hop_pairs;
    m.max_width_asymmetry = std::max(m.max_width_asymmetry, hop_pair_asymmetry(g, i));
  }
  return m;
}

inline bool is_uniform_diamond(const Diamond& d) { return compute_metrics(d).max_width_asymmetry == 0; }

inline bool is_meshed_diamond(const Diamond& d) { return compute_metrics(d).meshed_hop_pairs > 0; }

}  // namespace mmlpt
