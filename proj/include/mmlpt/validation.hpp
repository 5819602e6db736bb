#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"
#include "mmlpt/mda_lite.hpp"
#include "mmlpt/simulator.hpp"

namespace mmlpt {

enum class Algorithm { mda, mda_lite, single_flow };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::mda: return "mda";
    case Algorithm::mda_lite: return "mda-lite";
    case Algorithm::single_flow: return "single-flow";
  }
  return "mda";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "mda") return Algorithm::mda;
  if (s == "mda-lite") return Algorithm::mda_lite;
  if (s == "single-flow") return Algorithm::single_flow;
  throw std::invalid_argument("unknown algorithm: " + s);
}

struct AlgorithmConfig {
  Algorithm algorithm = Algorithm::mda;
  MeshingTestConfig meshing;
  int max_ttl = 30;
};

/// Runs one trace of `cfg.algorithm` against the simulator and returns the
/// discovered graph.
inline MultipathGraph run_algorithm(Prober& prober, const StoppingPoints& sp, const AlgorithmConfig& cfg,
                                    ProbeCounts* counts = nullptr) {
  TraceOptions trace;
  trace.max_ttl = cfg.max_ttl;
  switch (cfg.algorithm) {
    case Algorithm::mda: {
      auto r = mda_trace(prober, sp, MdaOptions{trace});
      if (counts) *counts = r.counts;
      return r.graph;
    }
    case Algorithm::mda_lite: {
      LiteOptions opts;
      opts.trace = trace;
      opts.meshing = cfg.meshing;
      auto r = mda_lite_trace(prober, sp, opts);
      if (counts) *counts = r.counts;
      return r.graph;
    }
    case Algorithm::single_flow: {
      auto r = single_flow_trace(prober, trace);
      if (counts) *counts = r.counts;
      return r.graph;
    }
  }
  throw std::logic_error("unreachable");
}

struct ValidationReport {
  Algorithm algorithm = Algorithm::mda;
  int runs_per_sample = 0;
  int samples = 0;
  std::vector<double> sample_failure_rates;
  double observed_mean_failure = 0.0;
  double ci_halfwidth = 0.0;
  double exact_failure = 0.0;
  double tolerance_factor = 3.0;
  bool pass = false;
};

/// Student-t 95% half-width of the mean of `xs`.
inline double ci95_halfwidth(const std::vector<double>& xs) {
  const auto n = xs.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(static_cast<double>(n));
}

/// Repeats the algorithm runs×samples times, each run on a freshly seeded
/// simulator, and compares the failure rate with the exact prediction. Run
/// j of sample i always uses the same seed, so the report does not depend
/// on the thread count.
inline ValidationReport validate_tool(const SimTopology& t, const AlgorithmConfig& cfg, const StoppingPoints& sp,
                                      int runs, int samples, std::uint64_t seed, unsigned threads = 0) {
  if (runs < 1 || samples < 1) throw std::invalid_argument("runs and samples must be positive");
  if (!t.all_responsive()) {
    throw std::invalid_argument("validation requires every node to answer every probe");
  }
  ValidationReport rep;
  rep.algorithm = cfg.algorithm;
  rep.runs_per_sample = runs;
  rep.samples = samples;
  rep.exact_failure = topology_failure_probability(t, sp);
  const MultipathGraph truth = t.ground_truth();

  std::vector<int> failures(samples, 0);
  auto work = [&](unsigned worker, unsigned stride) {
    for (int s = static_cast<int>(worker); s < samples; s += static_cast<int>(stride)) {
      for (int r = 0; r < runs; ++r) {
        Simulator sim(t, derive_seed(seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(r)));
        if (!run_algorithm(sim, sp, cfg).same_topology(truth)) ++failures[s];
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(samples));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
    for (auto& th : pool) th.join();
  }

  for (int f : failures) rep.sample_failure_rates.push_back(static_cast<double>(f) / runs);
  rep.observed_mean_failure =
      std::accumulate(rep.sample_failure_rates.begin(), rep.sample_failure_rates.end(), 0.0) / samples;
  rep.ci_halfwidth = ci95_halfwidth(rep.sample_failure_rates);
  const double diff = std::abs(rep.observed_mean_failure - rep.exact_failure);
  rep.pass = diff <= rep.tolerance_factor * rep.ci_halfwidth || diff == 0.0;
  return rep;
}

inline nlohmann::json to_json(const ValidationReport& r) {
  return {{"algorithm", to_string(r.algorithm)},
          {"runs_per_sample", r.runs_per_sample},
          {"samples", r.samples},
          {"sample_failure_rates", r.sample_failure_rates},
          {"observed_mean_failure", r.observed_mean_failure},
          {"ci_halfwidth", r.ci_halfwidth},
          {"exact_failure", r.exact_failure},
          {"tolerance_factor", r.tolerance_factor},
          {"verdict", r.pass ? "pass" : "fail"}};
}

}  // namespace mmlpt
