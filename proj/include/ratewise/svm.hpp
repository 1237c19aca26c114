#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ratewise/constraints.hpp"
#include "ratewise/error.hpp"

namespace ratewise {

struct TrainerConfig {
  double c = 10.0;         // soft-margin penalty
  double tol = 1e-6;       // relative duality gap at which training stops
  int max_iter = 10000;    // epochs over the training set
  std::uint64_t seed = 0;  // coordinate visiting order

  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::validation, "C must be a positive finite number");
    if (!(tol > 0.0)) fail(ErrorKind::validation, "tol must be positive");
    if (max_iter < 1) fail(ErrorKind::validation, "maxIter must be at least 1");
  }
};

struct WeightVector {
  std::vector<double> w;
  double objective = 0.0;  // primal: 0.5*|w|^2 + C*sum(hinge)
  int iterations = 0;
  // Dual objective 0.5*|w|^2 - sum(alpha) after each epoch. Coordinate
  // descent minimizes it exactly per coordinate, so it never increases.
  std::vector<double> trace;

  bool operator==(const WeightVector&) const = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double primal_objective(std::span<const double> w, const std::vector<TrainingPair>& pairs, double c) {
  double loss = 0.0;
  for (const auto& p : pairs) loss += std::max(0.0, 1.0 - p.label * dot(w, p.diff));
  return 0.5 * dot(w, w) + c * loss;
}

// Linear soft-margin SVM without bias, trained on pairwise difference
// vectors.
//
// Solved with dual coordinate descent on the hinge-loss dual
//   min_a 0.5 * a'Qa - sum(a),  0 <= a_t <= C,  Q_st = y_s y_t <x_s, x_t>
// keeping w = sum_t a_t y_t x_t in sync. Each epoch visits the
// coordinates in a seeded permutation; training stops once the duality gap
// falls below tol relative to the primal objective, or after max_iter
// epochs.
inline WeightVector train(const std::vector<TrainingPair>& pairs, const TrainerConfig& cfg = {}) {
  cfg.validate();
  if (pairs.empty()) fail(ErrorKind::validation, "no constraints");
  const std::size_t m = pairs.front().diff.size();
  std::vector<double> sq_norm(pairs.size());
  bool any_nonzero = false;
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto& p = pairs[t];
    if (p.diff.size() != m) fail(ErrorKind::validation, "difference vectors have inconsistent lengths");
    if (p.label != 1 && p.label != -1) fail(ErrorKind::validation, "labels must be +1 or -1");
    for (double v : p.diff) {
      if (!std::isfinite(v)) fail(ErrorKind::validation, "non-finite difference vector");
    }
    sq_norm[t] = dot(p.diff, p.diff);
    any_nonzero = any_nonzero || sq_norm[t] > 0.0;
  }
  if (!any_nonzero) fail(ErrorKind::validation, "degenerate constraints: all difference vectors are zero");

  WeightVector out;
  out.w.assign(m, 0.0);
  std::vector<double> alpha(pairs.size(), 0.0);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);

  auto& w = out.w;
  for (int epoch = 1; epoch <= cfg.max_iter; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t t : order) {
      if (sq_norm[t] == 0.0) continue;
      const auto& p = pairs[t];
      const double grad = p.label * dot(w, p.diff) - 1.0;
      const double next = std::clamp(alpha[t] - grad / sq_norm[t], 0.0, cfg.c);
      const double step = (next - alpha[t]) * p.label;
      if (step == 0.0) continue;
      alpha[t] = next;
      for (std::size_t j = 0; j < m; ++j) w[j] += step * p.diff[j];
    }
    const double half_norm = 0.5 * dot(w, w);
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    out.trace.push_back(half_norm - alpha_sum);
    out.iterations = epoch;
    const double primal = primal_objective(w, pairs, cfg.c);
    const double dual = alpha_sum - half_norm;
    if (primal - dual <= cfg.tol * std::max(1.0, std::abs(primal))) break;
  }
  out.objective = primal_objective(w, pairs, cfg.c);
  return out;
}

struct PerTypeWeights {
  std::map<std::string, WeightVector> weights;
  std::map<std::string, std::string> failures;  // type label -> reason
};

// Independent training per type label; a type that cannot be trained is
// reported in `failures` without affecting the others.
inline PerTypeWeights train_per_type(const ConstraintSet& cs, const TrainerConfig& cfg = {}) {
  if (cs.scheme != SchemeKind::type) fail(ErrorKind::validation, "per-type training needs a type constraint set");
  cfg.validate();
  std::map<std::string, std::future<WeightVector>> jobs;
  for (const auto& [label, pairs] : cs.by_type) {
    jobs.emplace(label, std::async(std::launch::async, [&pairs, cfg] { return train(pairs, cfg); }));
  }
  PerTypeWeights out;
  for (auto& [label, job] : jobs) {
    try {
      out.weights.emplace(label, job.get());
    } catch (const std::exception& e) {
      out.failures.emplace(label, e.what());
    }
  }
  return out;
}

}  // namespace ratewise
