// Command-line front end: trace, validate, compare, survey and alias.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmlpt/mmlpt.hpp"

using namespace mmlpt;
using nlohmann::json;

namespace {

struct GlobalArgs {
  std::uint64_t seed = 1;
  std::string backend;
  std::string output;
  std::string format = "json";
};

struct StoppingArgs {
  double bound = 0.05;
  int max_branch = 30;
  std::optional<double> alpha;
  std::string nk_table;

  StoppingPoints build() const {
    if (!nk_table.empty()) return load_stopping_points(nk_table);
    if (alpha) return StoppingPoints::from_alpha(*alpha, max_branch);
    return derive_table(GlobalBound{bound}, max_branch);
  }
};

void add_stopping_options(CLI::App* cmd, StoppingArgs& s) {
  cmd->add_option("--bound", s.bound, "global failure bound epsilon; the per-node bound is epsilon / max-branch");
  cmd->add_option("--max-branch", s.max_branch, "largest branching factor the bound is spread over");
  cmd->add_option("--alpha", s.alpha, "per-node failure bound, overriding --bound");
  cmd->add_option("--nk-table", s.nk_table, "JSON stopping table {alpha, n:[n_1, n_2, ...]}")->check(CLI::ExistingFile);
}

SimTopology topology_from_backend(const std::string& backend) {
  if (backend == "net") throw std::runtime_error("the network backend is reserved and not implemented; use sim:<file>");
  if (backend.rfind("sim:", 0) != 0) throw std::runtime_error("backend must be sim:<topology-file>");
  return load_topology(backend.substr(4));
}

void write_out(const GlobalArgs& g, const std::string& text) {
  if (g.output.empty() || g.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(g.output);
  if (!out) throw std::runtime_error("cannot write " + g.output);
  out << text;
}

std::string hop_table(const MultipathGraph& g, const ProbeCounts& c) {
  std::vector<std::vector<std::string>> rows;
  for (int h = 1; h <= g.max_hop(); ++h) {
    std::string addrs;
    for (const auto& v : g.layer(h)) addrs += (addrs.empty() ? "" : " ") + v.address.to_string();
    rows.push_back({std::to_string(h), std::to_string(g.width(h)), std::to_string(c.at_ttl(h)), addrs});
  }
  std::ostringstream os;
  os << text_table({"hop", "vertices", "probes", "addresses"}, rows);
  os << "total probes: " << c.total << "\n";
  return os.str();
}

std::string side_by_side_dot(const MultipathGraph& ip, const RouterGraph* router) {
  std::ostringstream os;
  os << "digraph \"trace\" {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  os << "  subgraph \"cluster_ip\" {\n    label=\"IP level\";\n";
  write_dot_body(os, ip, "ip_", "    ");
  os << "  }\n";
  if (router) {
    os << "  subgraph \"cluster_router\" {\n    label=\"router level\";\n";
    write_dot_body(os, router->graph, "rt_", "    ");
    os << "  }\n";
  }
  os << "}\n";
  return os.str();
}

struct TraceArgs {
  std::string algorithm = "mda-lite";
  int phi = 2;
  int max_ttl = 30;
  std::string destination;
  bool multilevel = false;
  int rounds = 10;
  StoppingArgs stopping;
};

int run_trace(const GlobalArgs& g, const TraceArgs& a) {
  const auto topo = topology_from_backend(g.backend);
  if (!a.destination.empty() && Address::parse(a.destination) != topo.destination_address()) {
    throw std::runtime_error("destination " + a.destination + " is not the destination of the simulated topology (" +
                             topo.destination_address().to_string() + ")");
  }
  const auto fmt = output_format_from_string(g.format);
  const auto sp = a.stopping.build();
  const auto alg = algorithm_from_string(a.algorithm);
  Simulator sim(topo, g.seed);
  TraceOptions trace;
  trace.max_ttl = a.max_ttl;

  if (a.multilevel) {
    if (alg != Algorithm::mda_lite) throw std::runtime_error("--multilevel runs on top of mda-lite");
    LiteOptions opts;
    opts.trace = trace;
    opts.meshing.phi = a.phi;
    AliasSchedule sched;
    sched.rounds = a.rounds;
    const auto r = multilevel_trace(sim, sp, opts, sched);
    switch (fmt) {
      case OutputFormat::json: write_out(g, to_json(r).dump(2) + "\n"); break;
      case OutputFormat::dot: write_out(g, side_by_side_dot(r.trace.graph, &r.router)); break;
      case OutputFormat::text: {
        std::ostringstream os;
        os << hop_table(r.trace.graph, r.trace.counts) << "\n";
        for (const auto& d : r.router.diamonds) {
          os << "diamond " << d.identity.first << " -> " << d.identity.second << ": " << to_string(d.outcome) << "\n";
        }
        write_out(g, os.str());
        break;
      }
    }
    return 0;
  }

  json doc;
  MultipathGraph graph;
  ProbeCounts counts;
  switch (alg) {
    case Algorithm::mda: {
      const auto r = mda_trace(sim, sp, MdaOptions{trace});
      doc = to_json(r);
      graph = r.graph;
      counts = r.counts;
      break;
    }
    case Algorithm::mda_lite: {
      LiteOptions opts;
      opts.trace = trace;
      opts.meshing.phi = a.phi;
      const auto r = mda_lite_trace(sim, sp, opts);
      doc = to_json(r);
      graph = r.graph;
      counts = r.counts;
      break;
    }
    case Algorithm::single_flow: {
      const auto r = single_flow_trace(sim, trace);
      doc = to_json(r);
      doc["algorithm"] = "single-flow";
      graph = r.graph;
      counts = r.counts;
      break;
    }
  }
  doc["seed"] = g.seed;
  doc["stopping"] = to_json(sp);
  switch (fmt) {
    case OutputFormat::json: write_out(g, doc.dump(2) + "\n"); break;
    case OutputFormat::dot: write_out(g, side_by_side_dot(graph, nullptr)); break;
    case OutputFormat::text: write_out(g, hop_table(graph, counts)); break;
  }
  return 0;
}

struct ValidateArgs {
  std::string topology;
  std::string algorithm = "mda";
  int phi = 2;
  int runs = 1000;
  int samples = 50;
  unsigned threads = 0;
  StoppingArgs stopping;
};

int run_validate(const GlobalArgs& g, const ValidateArgs& a) {
  const auto topo = load_topology(a.topology);
  const auto sp = a.stopping.build();
  AlgorithmConfig cfg;
  cfg.algorithm = algorithm_from_string(a.algorithm);
  cfg.meshing.phi = a.phi;
  const auto rep = validate_tool(topo, cfg, sp, a.runs, a.samples, g.seed, a.threads);
  if (output_format_from_string(g.format) == OutputFormat::text) {
    std::ostringstream os;
    os << "exact failure:    " << fixed(rep.exact_failure, 6) << "\n"
       << "observed mean:    " << fixed(rep.observed_mean_failure, 6) << "\n"
       << "95% CI halfwidth: " << fixed(rep.ci_halfwidth, 6) << "\n"
       << "verdict:          " << (rep.pass ? "pass" : "fail") << "\n";
    write_out(g, os.str());
  } else {
    write_out(g, to_json(rep).dump(2) + "\n");
  }
  return rep.pass ? 0 : 2;
}

struct CompareArgs {
  std::vector<std::string> topologies;
  int seeds = 30;
  StoppingArgs stopping;
};

std::vector<NamedTopology> load_named(const std::vector<std::string>& files) {
  std::vector<NamedTopology> out;
  for (const auto& f : files) out.push_back({std::filesystem::path(f).stem().string(), load_topology(f)});
  return out;
}

int run_compare(const GlobalArgs& g, const CompareArgs& a) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < a.seeds; ++i) seeds.push_back(derive_seed(g.seed, static_cast<std::uint64_t>(i)));
  const auto rep = run_comparison(load_named(a.topologies), seeds, a.stopping.build());
  write_out(g, emit(rep, output_format_from_string(g.format)));
  return 0;
}

struct SurveyArgs {
  std::vector<std::string> topologies;
  int runs = 1;
  int phi = 2;
  int rounds = 10;
  StoppingArgs stopping;
};

int run_survey(const GlobalArgs& g, const SurveyArgs& a) {
  const auto sp = a.stopping.build();
  const auto named = load_named(a.topologies);
  std::vector<SurveyTrace> traces;
  LiteOptions opts;
  opts.meshing.phi = a.phi;
  AliasSchedule sched;
  sched.rounds = a.rounds;
  for (std::size_t ti = 0; ti < named.size(); ++ti) {
    for (int r = 0; r < a.runs; ++r) {
      Simulator sim(named[ti].topology, derive_seed(g.seed, ti, static_cast<std::uint64_t>(r)));
      auto res = multilevel_trace(sim, sp, opts, sched);
      traces.push_back({named[ti].name + "#" + std::to_string(r), res.trace.graph, res.router});
    }
  }
  write_out(g, emit(tally_survey(traces), output_format_from_string(g.format), traces));
  return 0;
}

struct AliasArgs {
  std::string input;
  std::optional<int> rounds;
};

int run_alias(const GlobalArgs& g, const AliasArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw std::runtime_error("cannot open " + a.input);
  const auto doc = json::parse(in);
  if (!doc.contains("graph") || !doc.contains("replies")) {
    throw std::runtime_error("input must be the JSON output of `trace --multilevel`");
  }
  const auto graph = graph_from_json(doc.at("graph"));
  std::vector<ExchangeRecord> log;
  for (const auto& r : doc.at("replies")) log.push_back(exchange_from_json(r));
  const int rounds = a.rounds.value_or(recorded_rounds(log));
  const auto partitions = offline_partitions(graph, log, rounds);
  const auto router = collapse(graph, final_partitions(partitions));
  switch (output_format_from_string(g.format)) {
    case OutputFormat::json:
      write_out(g, json{{"partitions", partitions_to_json(partitions)}, {"router_level", to_json(router)}}.dump(2) +
                       "\n");
      break;
    case OutputFormat::dot: write_out(g, side_by_side_dot(graph, &router)); break;
    case OutputFormat::text: {
      std::ostringstream os;
      for (const auto& hop : partitions) {
        if (hop.empty()) continue;
        const auto& last = hop.back();
        os << "hop " << last.hop << " after round " << last.round << ":\n";
        for (const auto& s : last.sets) {
          os << " ";
          for (auto x : s) os << " " << x << " (" << to_string(last.status.at(x)) << ")";
          os << "\n";
        }
      }
      write_out(g, os.str());
      break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multipath traceroute with MDA, MDA-Lite and alias resolution over a simulated network"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalArgs g;
  app.add_option("--seed", g.seed, "seed of the simulator and of every derived run");
  app.add_option("--backend", g.backend, "probe backend: sim:<topology-file> (net is reserved)");
  app.add_option("--output", g.output, "output file (default stdout)");
  app.add_option("--format", g.format, "json, dot or text")->check(CLI::IsMember({"json", "dot", "text"}));

  TraceArgs ta;
  auto* trace = app.add_subcommand("trace", "trace the simulated topology toward its destination");
  trace->add_option("--algorithm", ta.algorithm, "mda, mda-lite or single-flow")
      ->check(CLI::IsMember({"mda", "mda-lite", "single-flow"}));
  trace->add_option("--phi", ta.phi, "meshing test flows per vertex (>= 2)")->check(CLI::Range(2, 1000));
  trace->add_option("--max-ttl", ta.max_ttl, "largest TTL probed")->check(CLI::Range(1, 255));
  trace->add_option("--destination", ta.destination, "destination address (must match the topology)");
  trace->add_flag("--multilevel", ta.multilevel, "resolve aliases and emit the router-level graph");
  trace->add_option("--rounds", ta.rounds, "alias resolution rounds after round 0")->check(CLI::Range(0, 100));
  add_stopping_options(trace, ta.stopping);

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "compare observed failure rates with the exact prediction");
  validate->add_option("--topology", va.topology, "topology JSON")->required()->check(CLI::ExistingFile);
  validate->add_option("--algorithm", va.algorithm, "mda, mda-lite or single-flow")
      ->check(CLI::IsMember({"mda", "mda-lite", "single-flow"}));
  validate->add_option("--phi", va.phi, "meshing test flows per vertex (>= 2)")->check(CLI::Range(2, 1000));
  validate->add_option("--runs", va.runs, "runs per sample")->check(CLI::PositiveNumber);
  validate->add_option("--samples", va.samples, "number of samples")->check(CLI::PositiveNumber);
  validate->add_option("--threads", va.threads, "worker threads (0 = hardware concurrency)");
  add_stopping_options(validate, va.stopping);

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "MDA, MDA-Lite and single-flow ratios against a reference MDA run");
  compare->add_option("--topology", ca.topologies, "topology JSON (repeatable)")->required()->check(CLI::ExistingFile);
  compare->add_option("--seeds", ca.seeds, "seeded rounds per topology")->check(CLI::PositiveNumber);
  add_stopping_options(compare, ca.stopping);

  SurveyArgs sa;
  auto* survey = app.add_subcommand("survey", "measured and distinct diamonds, metrics and collapse tallies");
  survey->add_option("--topology", sa.topologies, "topology JSON (repeatable)")->required()->check(CLI::ExistingFile);
  survey->add_option("--runs", sa.runs, "traces per topology")->check(CLI::PositiveNumber);
  survey->add_option("--phi", sa.phi, "meshing test flows per vertex (>= 2)")->check(CLI::Range(2, 1000));
  survey->add_option("--rounds", sa.rounds, "alias resolution rounds after round 0")->check(CLI::Range(0, 100));
  add_stopping_options(survey, sa.stopping);

  AliasArgs aa;
  auto* alias = app.add_subcommand("alias", "replay alias resolution offline from a recorded multilevel trace");
  alias->add_option("--input", aa.input, "output of `trace --multilevel`")->required()->check(CLI::ExistingFile);
  alias->add_option("--rounds", aa.rounds, "replay up to this round (default: all recorded)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*trace) {
      if (g.backend.empty()) throw std::runtime_error("trace needs --backend sim:<topology-file>");
      return run_trace(g, ta);
    }
    if (*validate) return run_validate(g, va);
    if (*compare) return run_compare(g, ca);
    if (*survey) return run_survey(g, sa);
    if (*alias) return run_alias(g, aa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
