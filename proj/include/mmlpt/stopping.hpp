#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmlpt/topology.hpp"

namespace mmlpt {

struct GlobalBound {
  double epsilon = 0.05;
};

/// Probability that n uniform draws over k+1 categories leave at least one
/// category unseen, by inclusion-exclusion over the missed categories.
/// Terms shrink fast near the stopping points, so the alternating sum stays
/// well conditioned there; long double keeps C(k+1, i) and powers of two
/// exact, so boundary cases such as 2 (1/2)^6 = 1/32 compare exactly.
inline double miss_probability(int k, long n) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (n <= 0) return 1.0;
  const long double m = static_cast<long double>(k) + 1.0L;
  long double sum = 0.0L;
  long double binom = 1.0L;
  for (int i = 1; i <= k; ++i) {
    binom = binom * (m - (i - 1)) / i;
    const long double term = binom * std::pow((m - i) / m, static_cast<long double>(n));
    sum += (i % 2 == 1) ? term : -term;
    if (term < 1e-300L) break;
  }
  return static_cast<double>(std::clamp(sum, 0.0L, 1.0L));
}

/// The MDA's probe budgets: n_k is how many probes a vertex gets, once k of
/// its successors are known, before the hypothesis of a (k+1)-th is
/// rejected. n_0 is 1 (the first probe).
class StoppingPoints {
 public:
  static constexpr int kDefaultDepth = 128;

  /// Smallest n_k with miss_probability(k, n_k) <= alpha, for k up to depth.
  static StoppingPoints from_alpha(double alpha, int max_branching = 30, int depth = kDefaultDepth) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("per-node bound must lie in (0,1)");
    StoppingPoints sp;
    sp.alpha_ = alpha;
    sp.max_branching_ = max_branching;
    long n = 1;
    for (int k = 1; k <= std::max(depth, max_branching); ++k) {
      while (miss_probability(k, n) > alpha) ++n;
      sp.table_.push_back(static_cast<int>(n));
    }
    return sp;
  }

  /// An externally supplied table; table[0] is n_1.
  static StoppingPoints from_table(std::vector<int> table, double alpha = std::numeric_limits<double>::quiet_NaN()) {
    if (table.empty()) throw std::invalid_argument("stopping table is empty");
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table[i] < (i == 0 ? 2 : table[i - 1] + 1)) {
        throw std::invalid_argument("stopping table must be strictly increasing with n_1 >= 2");
      }
    }
    StoppingPoints sp;
    sp.alpha_ = alpha;
    sp.max_branching_ = static_cast<int>(table.size());
    sp.table_ = std::move(table);
    return sp;
  }

  int at(int k) const {
    if (k <= 0) return 1;
    if (k > static_cast<int>(table_.size())) {
      throw std::out_of_range("stopping table has no entry for k=" + std::to_string(k));
    }
    return table_[k - 1];
  }

  int depth() const { return static_cast<int>(table_.size()); }
  double per_node_bound() const { return alpha_; }
  int max_branching() const { return max_branching_; }
  const std::vector<int>& table() const { return table_; }

 private:
  double alpha_ = 0.0;
  int max_branching_ = 30;
  std::vector<int> table_;
};

/// Splits the global failure bound evenly over max_branching branching
/// points and derives the per-node table from the result.
inline StoppingPoints derive_table(GlobalBound global, int max_branching = 30) {
  if (!(global.epsilon > 0.0 && global.epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
  if (max_branching < 1) throw std::invalid_argument("max_branching must be >= 1");
  return StoppingPoints::from_alpha(global.epsilon / max_branching, max_branching);
}

/// {alpha, n:[n_1, n_2, ...]}
inline nlohmann::json to_json(const StoppingPoints& sp) {
  nlohmann::json j{{"n", sp.table()}};
  j["alpha"] = std::isnan(sp.per_node_bound()) ? nlohmann::json(nullptr) : nlohmann::json(sp.per_node_bound());
  return j;
}

inline StoppingPoints stopping_points_from_json(const nlohmann::json& j) {
  const double alpha = j.contains("alpha") && !j.at("alpha").is_null() ? j.at("alpha").get<double>()
                                                                       : std::numeric_limits<double>::quiet_NaN();
  return StoppingPoints::from_table(j.at("n").get<std::vector<int>>(), alpha);
}

inline StoppingPoints load_stopping_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopping table " + path);
  return stopping_points_from_json(nlohmann::json::parse(in));
}

/// Exact probability that the stopping rule misses at least one of a
/// vertex's `successors` uniformly balanced next hops. Markov chain over
/// (successors found, probes sent); the budget is always compared with the
/// total number of probes sent through the vertex.
inline double vertex_failure_probability(int successors, const StoppingPoints& sp) {
  if (successors <= 1) return 0.0;
  const int K = successors;
  std::vector<double> mass(K + 1, 0.0);
  mass[1] = 1.0;  // the first probe always finds a successor
  double failure = 0.0;
  for (long sent = 1;; ++sent) {
    bool running = false;
    for (int k = 1; k < K; ++k) {
      if (mass[k] == 0.0) continue;
      if (sent >= sp.at(k)) {
        failure += mass[k];
        mass[k] = 0.0;
      } else {
        running = true;
      }
    }
    if (!running) break;
    for (int k = K - 1; k >= 1; --k) {
      const double p_new = static_cast<double>(K - k) / K;
      mass[k + 1] += mass[k] * p_new;
      mass[k] *= 1.0 - p_new;
    }
  }
  return failure;
}

/// Exact probability that the MDA misses part of the topology, treating
/// vertices as independent. Requires every node to answer every probe.
inline double topology_failure_probability(const SimTopology& t, const StoppingPoints& sp) {
  if (!t.all_responsive()) {
    throw std::invalid_argument("failure model requires every node to be responsive");
  }
  double success = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    success *= 1.0 - vertex_failure_probability(static_cast<int>(t.successors(i).size()), sp);
  }
  return 1.0 - success;
}

}  // namespace mmlpt
