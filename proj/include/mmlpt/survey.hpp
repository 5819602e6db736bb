#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmlpt/collapse.hpp"
#include "mmlpt/diamond.hpp"
#include "mmlpt/graph_io.hpp"
#include "mmlpt/simulator.hpp"
#include "mmlpt/validation.hpp"

namespace mmlpt {

enum class OutputFormat { json, dot, text };

inline OutputFormat output_format_from_string(const std::string& s) {
  if (s == "json") return OutputFormat::json;
  if (s == "dot") return OutputFormat::dot;
  if (s == "text") return OutputFormat::text;
  throw std::invalid_argument("unknown output format: " + s);
}

struct NamedTopology {
  std::string name;
  SimTopology topology;
};

// ---------------------------------------------------------------------------
// Comparative runs

struct Variant {
  std::string name;
  AlgorithmConfig config;
};

/// The reference MDA first, then a second MDA, MDA-Lite with phi 2 and 4,
/// and the single-flow baseline.
inline std::vector<Variant> default_variants() {
  AlgorithmConfig mda{Algorithm::mda, {}, 30};
  AlgorithmConfig lite2{Algorithm::mda_lite, {2}, 30};
  AlgorithmConfig lite4{Algorithm::mda_lite, {4}, 30};
  AlgorithmConfig single{Algorithm::single_flow, {}, 30};
  return {{"mda", mda}, {"mda-2", mda}, {"mda-lite-phi2", lite2}, {"mda-lite-phi4", lite4}, {"single-flow", single}};
}

struct TraceComparison {
  std::string topology;
  std::uint64_t seed = 0;
  std::string variant;
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::uint64_t probes = 0;
  double vertex_ratio = 1.0;
  double edge_ratio = 1.0;
  double probe_ratio = 1.0;
  bool full_discovery = false;
};

struct VariantAggregate {
  std::string variant;
  std::uint64_t vertices = 0;
  std::uint64_t edges = 0;
  std::uint64_t probes = 0;
  double vertex_ratio = 1.0;
  double edge_ratio = 1.0;
  double probe_ratio = 1.0;
  double full_discovery_rate = 0.0;
};

struct ComparativeReport {
  std::vector<TraceComparison> rows;
  std::vector<VariantAggregate> aggregate;
};

inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

/// Each (topology, seed) pair is traced by every variant, variant v using
/// its own simulator seed derived from (seed, topology index, v). Ratios are
/// taken against the first variant; aggregate ratios are ratios of sums.
inline ComparativeReport run_comparison(const std::vector<NamedTopology>& topologies,
                                        const std::vector<std::uint64_t>& seeds, const StoppingPoints& sp,
                                        const std::vector<Variant>& variants = default_variants()) {
  if (variants.empty()) throw std::invalid_argument("no variants to compare");
  ComparativeReport rep;
  std::vector<VariantAggregate> agg(variants.size());
  std::vector<std::size_t> full(variants.size(), 0);
  for (std::size_t v = 0; v < variants.size(); ++v) agg[v].variant = variants[v].name;

  for (std::size_t ti = 0; ti < topologies.size(); ++ti) {
    const auto& nt = topologies[ti];
    const auto truth = nt.topology.ground_truth();
    for (auto seed : seeds) {
      std::vector<TraceComparison> rows;
      for (std::size_t v = 0; v < variants.size(); ++v) {
        Simulator sim(nt.topology, derive_seed(seed, ti, v));
        ProbeCounts counts;
        const auto g = run_algorithm(sim, sp, variants[v].config, &counts);
        TraceComparison row;
        row.topology = nt.name;
        row.seed = seed;
        row.variant = variants[v].name;
        row.vertices = g.vertex_count();
        row.edges = g.edge_count();
        row.probes = counts.total;
        row.full_discovery = g.same_topology(truth);
        rows.push_back(row);
        agg[v].vertices += row.vertices;
        agg[v].edges += row.edges;
        agg[v].probes += row.probes;
        full[v] += row.full_discovery ? 1 : 0;
      }
      for (auto& row : rows) {
        row.vertex_ratio = ratio(static_cast<double>(row.vertices), static_cast<double>(rows.front().vertices));
        row.edge_ratio = ratio(static_cast<double>(row.edges), static_cast<double>(rows.front().edges));
        row.probe_ratio = ratio(static_cast<double>(row.probes), static_cast<double>(rows.front().probes));
        rep.rows.push_back(row);
      }
    }
  }
  const double runs = static_cast<double>(topologies.size() * seeds.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    agg[v].vertex_ratio = ratio(static_cast<double>(agg[v].vertices), static_cast<double>(agg[0].vertices));
    agg[v].edge_ratio = ratio(static_cast<double>(agg[v].edges), static_cast<double>(agg[0].edges));
    agg[v].probe_ratio = ratio(static_cast<double>(agg[v].probes), static_cast<double>(agg[0].probes));
    agg[v].full_discovery_rate = runs == 0.0 ? 0.0 : static_cast<double>(full[v]) / runs;
  }
  rep.aggregate = std::move(agg);
  return rep;
}

inline nlohmann::json to_json(const ComparativeReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& x : r.rows) {
    rows.push_back({{"topology", x.topology},
                    {"seed", x.seed},
                    {"variant", x.variant},
                    {"vertices", x.vertices},
                    {"edges", x.edges},
                    {"probes", x.probes},
                    {"vertex_ratio", x.vertex_ratio},
                    {"edge_ratio", x.edge_ratio},
                    {"probe_ratio", x.probe_ratio},
                    {"full_discovery", x.full_discovery}});
  }
  nlohmann::json agg = nlohmann::json::array();
  for (const auto& a : r.aggregate) {
    agg.push_back({{"variant", a.variant},
                   {"vertices", a.vertices},
                   {"edges", a.edges},
                   {"probes", a.probes},
                   {"vertex_ratio", a.vertex_ratio},
                   {"edge_ratio", a.edge_ratio},
                   {"probe_ratio", a.probe_ratio},
                   {"full_discovery_rate", a.full_discovery_rate}});
  }
  return {{"rows", rows}, {"aggregate", agg}};
}

inline ComparativeReport comparative_report_from_json(const nlohmann::json& j) {
  ComparativeReport r;
  for (const auto& x : j.at("rows")) {
    r.rows.push_back({x.at("topology"), x.at("seed"), x.at("variant"), x.at("vertices"), x.at("edges"),
                      x.at("probes"), x.at("vertex_ratio"), x.at("edge_ratio"), x.at("probe_ratio"),
                      x.at("full_discovery")});
  }
  for (const auto& a : j.at("aggregate")) {
    r.aggregate.push_back({a.at("variant"), a.at("vertices"), a.at("edges"), a.at("probes"), a.at("vertex_ratio"),
                           a.at("edge_ratio"), a.at("probe_ratio"), a.at("full_discovery_rate")});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Survey tallies

struct SurveyTrace {
  std::string name;
  MultipathGraph graph;
  std::optional<RouterGraph> router;
};

/// Sorted values, ready to be plotted as CDFs.
struct MetricDistributions {
  std::vector<double> max_width;
  std::vector<double> max_length;
  std::vector<double> max_width_asymmetry;
  std::vector<double> meshed_hop_ratio;

  void add(const DiamondMetrics& m) {
    max_width.push_back(static_cast<double>(m.max_width));
    max_length.push_back(static_cast<double>(m.max_length));
    max_width_asymmetry.push_back(static_cast<double>(m.max_width_asymmetry));
    meshed_hop_ratio.push_back(m.meshed_hop_ratio());
  }

  void sort() {
    for (auto* v : {&max_width, &max_length, &max_width_asymmetry, &meshed_hop_ratio}) std::ranges::sort(*v);
  }

  bool operator==(const MetricDistributions&) const = default;
};

struct SurveyTally {
  std::size_t measured_diamond_count = 0;
  std::size_t distinct_diamond_count = 0;
  MetricDistributions measured;
  MetricDistributions distinct;
  std::size_t collapse_measured = 0;
  std::size_t collapse_distinct = 0;
  std::map<CollapseCase, double> measured_collapse;
  std::map<CollapseCase, double> distinct_collapse;

  bool operator==(const SurveyTally&) const = default;
};

/// Measured diamonds are encounters; distinct ones are identities. A
/// distinct diamond reports the lexicographically greatest metrics among
/// its encounters, and contributes weight 1 to the distinct collapse
/// fractions, shared evenly among the cases of its encounters. Both choices
/// make the tally independent of trace order.
inline SurveyTally tally_survey(const std::vector<SurveyTrace>& traces) {
  SurveyTally t;
  std::map<DiamondIdentity, DiamondMetrics> best;
  std::map<DiamondIdentity, std::vector<CollapseCase>> cases;
  for (auto c : kCollapseCases) {
    t.measured_collapse[c] = 0.0;
    t.distinct_collapse[c] = 0.0;
  }
  for (const auto& tr : traces) {
    for (const auto& d : extract_diamonds(tr.graph)) {
      ++t.measured_diamond_count;
      const auto m = compute_metrics(d);
      t.measured.add(m);
      const auto id = diamond_identity(d);
      auto [it, inserted] = best.emplace(id, m);
      if (!inserted && it->second < m) it->second = m;
    }
    if (tr.router) {
      for (const auto& dc : tr.router->diamonds) {
        ++t.collapse_measured;
        t.measured_collapse[dc.outcome] += 1.0;
        cases[dc.identity].push_back(dc.outcome);
      }
    }
  }
  t.distinct_diamond_count = best.size();
  for (const auto& [_, m] : best) t.distinct.add(m);
  t.measured.sort();
  t.distinct.sort();
  if (t.collapse_measured) {
    for (auto& [_, v] : t.measured_collapse) v /= static_cast<double>(t.collapse_measured);
  }
  t.collapse_distinct = cases.size();
  for (const auto& [_, cs] : cases) {
    for (auto c : cs) t.distinct_collapse[c] += 1.0 / static_cast<double>(cs.size());
  }
  if (t.collapse_distinct) {
    for (auto& [_, v] : t.distinct_collapse) v /= static_cast<double>(t.collapse_distinct);
  }
  return t;
}

inline nlohmann::json to_json(const MetricDistributions& m) {
  return {{"max_width", m.max_width},
          {"max_length", m.max_length},
          {"max_width_asymmetry", m.max_width_asymmetry},
          {"meshed_hop_ratio", m.meshed_hop_ratio}};
}

inline MetricDistributions metric_distributions_from_json(const nlohmann::json& j) {
  return {j.at("max_width"), j.at("max_length"), j.at("max_width_asymmetry"), j.at("meshed_hop_ratio")};
}

inline nlohmann::json to_json(const SurveyTally& t) {
  auto fractions = [](const std::map<CollapseCase, double>& m) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [c, v] : m) out[to_string(c)] = v;
    return out;
  };
  return {{"measured_diamond_count", t.measured_diamond_count},
          {"distinct_diamond_count", t.distinct_diamond_count},
          {"measured_metrics", to_json(t.measured)},
          {"distinct_metrics", to_json(t.distinct)},
          {"collapse",
           {{"measured_count", t.collapse_measured},
            {"distinct_count", t.collapse_distinct},
            {"measured", fractions(t.measured_collapse)},
            {"distinct", fractions(t.distinct_collapse)}}}};
}

inline SurveyTally survey_tally_from_json(const nlohmann::json& j) {
  SurveyTally t;
  t.measured_diamond_count = j.at("measured_diamond_count");
  t.distinct_diamond_count = j.at("distinct_diamond_count");
  t.measured = metric_distributions_from_json(j.at("measured_metrics"));
  t.distinct = metric_distributions_from_json(j.at("distinct_metrics"));
  const auto& c = j.at("collapse");
  t.collapse_measured = c.at("measured_count");
  t.collapse_distinct = c.at("distinct_count");
  for (auto cc : kCollapseCases) {
    t.measured_collapse[cc] = c.at("measured").at(to_string(cc));
    t.distinct_collapse[cc] = c.at("distinct").at(to_string(cc));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < r.size() ? r[c] : "";
      os << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << (c ? std::right : std::left) << cell;
    }
    os << "\n";
  };
  line(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& r : rows) line(r);
  return os.str();
}

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string emit(const ComparativeReport& r, OutputFormat f) {
  switch (f) {
    case OutputFormat::json: return to_json(r).dump(2) + "\n";
    case OutputFormat::text: {
      std::vector<std::vector<std::string>> rows;
      for (const auto& a : r.aggregate) {
        rows.push_back({a.variant, std::to_string(a.vertices), std::to_string(a.edges), std::to_string(a.probes),
                        fixed(a.vertex_ratio), fixed(a.edge_ratio), fixed(a.probe_ratio),
                        fixed(a.full_discovery_rate)});
      }
      return text_table({"variant", "vertices", "edges", "probes", "vertex_ratio", "edge_ratio", "probe_ratio",
                         "full_discovery"},
                        rows);
    }
    case OutputFormat::dot: throw std::invalid_argument("dot output is available for trace and survey only");
  }
  throw std::invalid_argument("unknown output format");
}

inline std::string emit(const SurveyTally& t, OutputFormat f, const std::vector<SurveyTrace>& traces = {}) {
  switch (f) {
    case OutputFormat::json: return to_json(t).dump(2) + "\n";
    case OutputFormat::text: {
      std::vector<std::vector<std::string>> rows;
      double total = 0.0;
      for (auto c : kCollapseCases) {
        const double count = t.measured_collapse.at(c) * static_cast<double>(t.collapse_measured);
        total += count;
        rows.push_back({to_string(c), std::to_string(static_cast<long long>(std::llround(count))),
                        fixed(t.measured_collapse.at(c)), fixed(t.distinct_collapse.at(c))});
      }
      double fm = 0.0, fd = 0.0;
      for (auto c : kCollapseCases) {
        fm += t.measured_collapse.at(c);
        fd += t.distinct_collapse.at(c);
      }
      rows.push_back({"total", std::to_string(static_cast<long long>(std::llround(total))), fixed(fm), fixed(fd)});
      std::ostringstream os;
      os << "measured diamonds: " << t.measured_diamond_count << "\n";
      os << "distinct diamonds: " << t.distinct_diamond_count << "\n\n";
      os << text_table({"collapse", "measured", "measured_fraction", "distinct_fraction"}, rows);
      return os.str();
    }
    case OutputFormat::dot: {
      std::ostringstream os;
      os << "digraph \"survey\" {\n  rankdir=LR;\n  node [shape=ellipse];\n";
      for (std::size_t i = 0; i < traces.size(); ++i) {
        const std::string base = "t" + std::to_string(i) + "_";
        os << "  subgraph \"cluster_" << base << "ip\" {\n    label=\"" << traces[i].name << " (IP level)\";\n";
        write_dot_body(os, traces[i].graph, base + "ip_", "    ");
        os << "  }\n";
        if (traces[i].router) {
          os << "  subgraph \"cluster_" << base << "router\" {\n    label=\"" << traces[i].name
             << " (router level)\";\n";
          write_dot_body(os, traces[i].router->graph, base + "rt_", "    ");
          os << "  }\n";
        }
      }
      os << "}\n";
      return os.str();
    }
  }
  throw std::invalid_argument("unknown output format");
}

}  // namespace mmlpt
