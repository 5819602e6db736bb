#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mmlpt/mmlpt.hpp"

namespace testing_support {

using mmlpt::Address;
using mmlpt::FlowId;
using mmlpt::MultipathGraph;

inline std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

inline Address ip(const std::string& s) { return Address::parse(s); }

// Builds a graph one hop at a time. Layers are lists of dotted quads; edges
// name addresses and the hop is inferred from the layer that holds them.
// Each edge gets its own witness flow.
inline MultipathGraph layered(const std::vector<std::vector<std::string>>& layers,
                              const std::vector<std::pair<std::string, std::string>>& edges) {
  MultipathGraph g;
  g.source = ip("192.0.2.1");
  std::map<Address, int> hop_of;
  for (std::size_t h = 0; h < layers.size(); ++h) {
    for (const auto& a : layers[h]) {
      g.add_vertex(static_cast<int>(h) + 1, ip(a));
      hop_of[ip(a)] = static_cast<int>(h) + 1;
    }
  }
  if (!layers.empty() && layers.back().size() == 1) g.destination = ip(layers.back().front());
  std::uint64_t flow = 1;
  for (const auto& [a, b] : edges) g.add_edge(hop_of.at(ip(a)), ip(a), ip(b), FlowId{flow++});
  return g;
}

// Random layered DAG: divergence, `widths` interior hops, convergence. Every
// vertex gets at least one predecessor and one successor.
inline MultipathGraph random_diamond(std::mt19937_64& rng, const std::vector<int>& widths, double extra_edge_p) {
  std::vector<std::vector<std::string>> layers;
  layers.push_back({"10.1.0.1"});
  for (std::size_t i = 0; i < widths.size(); ++i) {
    std::vector<std::string> l;
    for (int j = 0; j < widths[i]; ++j) {
      l.push_back("10." + std::to_string(i + 2) + ".0." + std::to_string(j + 1));
    }
    layers.push_back(l);
  }
  layers.push_back({"10." + std::to_string(widths.size() + 2) + ".0.1"});
  std::vector<std::pair<std::string, std::string>> edges;
  std::bernoulli_distribution extra(extra_edge_p);
  for (std::size_t h = 0; h + 1 < layers.size(); ++h) {
    const auto& a = layers[h];
    const auto& b = layers[h + 1];
    std::map<std::pair<std::size_t, std::size_t>, bool> used;
    auto link = [&](std::size_t i, std::size_t j) {
      if (used[{i, j}]) return;
      used[{i, j}] = true;
      edges.emplace_back(a[i], b[j]);
    };
    for (std::size_t j = 0; j < b.size(); ++j) link(std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng), j);
    for (std::size_t i = 0; i < a.size(); ++i) {
      bool has = false;
      for (std::size_t j = 0; j < b.size(); ++j) has = has || used[{i, j}];
      if (!has) link(i, std::uniform_int_distribution<std::size_t>(0, b.size() - 1)(rng));
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (extra(rng)) link(i, j);
      }
    }
  }
  return layered(layers, edges);
}

// Topology JSON in memory, for small shapes written inline in tests.
inline mmlpt::SimTopology topology(const std::vector<std::vector<std::string>>& layers,
                                   const std::vector<std::pair<std::string, std::string>>& edges) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& l : layers) {
    for (const auto& a : l) nodes.push_back({{"addr", a}});
  }
  nlohmann::json e = nlohmann::json::array();
  for (const auto& [a, b] : edges) e.push_back({a, b});
  return mmlpt::topology_from_json(
      {{"source", "192.0.2.1"}, {"destination", layers.back().front()}, {"nodes", nodes}, {"edges", e}});
}

// Binomial standard error of a proportion p over n trials.
inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace testing_support
