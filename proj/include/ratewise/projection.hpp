#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ratewise/core_data.hpp"
#include "ratewise/error.hpp"
#include "ratewise/scoring.hpp"

namespace ratewise {

struct ProjectionParams {
  double perplexity = 10.0;
  int iterations = 500;
  std::uint64_t seed = 42;

  bool operator==(const ProjectionParams&) const = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

struct ProjectionResult {
  std::string scheme_id;
  std::vector<EntityId> ids;  // dataset order
  std::vector<Point2> points;
  ProjectionParams params;

  bool operator==(const ProjectionResult&) const = default;
};

// Rows v_i with v_ij = w_j * d_ij, using each entity's own type vector for
// type schemes (uniform for types without one).
inline Eigen::MatrixXd weighted_matrix(const NormalizedMatrix& nm, const Dataset& ds, const WeightScheme& scheme) {
  const auto n = static_cast<Eigen::Index>(nm.rows());
  const auto m = static_cast<Eigen::Index>(nm.cols());
  Eigen::MatrixXd v(n, m);
  const std::vector<double> uniform(nm.cols(), 1.0 / static_cast<double>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::vector<double>* w = &scheme.weights;
    if (scheme.kind == SchemeKind::type) {
      auto it = scheme.type_weights.find(ds.entities()[static_cast<std::size_t>(i)].type_label);
      w = it != scheme.type_weights.end() ? &it->second : &uniform;
    }
    if (w->size() != nm.cols()) {
      fail(ErrorKind::validation, "scheme '" + scheme.id + "' has weights of the wrong dimension");
    }
    for (Eigen::Index j = 0; j < m; ++j) v(i, j) = (*w)[static_cast<std::size_t>(j)] * nm(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return v;
}

namespace detail {

// Conditional affinities p_{j|i} with the Gaussian bandwidth of each row
// tuned by bisection so that exp(H(P_i)) matches the perplexity.
inline Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& sq_dist, double perplexity) {
  const Eigen::Index n = sq_dist.rows();
  const double target = std::log(perplexity);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    // distances relative to the nearest neighbour keep exp() in range
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, sq_dist(i, j));
    }
    for (int step = 0; step < 200; ++step) {
      double sum = 0.0;
      double weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = sq_dist(i, j) - dmin;
        const double e = std::exp(-beta * d);
        p(i, j) = e;
        sum += e;
        weighted += d * e;
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-10) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).squaredNorm();
  }
  return d;
}

// Projection onto the two leading principal directions, with eigenvector
// signs fixed so the largest-magnitude loading is positive.
inline Eigen::MatrixXd principal_init(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd init = Eigen::MatrixXd::Zero(n, 2);
  if (x.cols() == 0) return init;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::Index m = x.cols();
  for (Eigen::Index c = 0; c < std::min<Eigen::Index>(2, m); ++c) {
    Eigen::VectorXd dir = solver.eigenvectors().col(m - 1 - c);
    Eigen::Index arg = 0;
    dir.cwiseAbs().maxCoeff(&arg);
    if (dir(arg) < 0.0) dir = -dir;
    init.col(c) = centered * dir;
  }
  return init;
}

}  // namespace detail

// Two-dimensional t-SNE embedding of the weighted attribute rows.
//
// Exact O(n^2) gradients, PCA initialization rescaled to a standard
// deviation of 1e-4, early exaggeration for the first quarter of the
// iterations, momentum with per-coordinate gains. The seed only drives a
// tiny jitter that breaks exact ties in the initialization, so results are
// reproducible bit for bit.
inline ProjectionResult project(const NormalizedMatrix& nm, const Dataset& ds, const WeightScheme& scheme,
                                const ProjectionParams& params = {}) {
  const auto n = static_cast<Eigen::Index>(nm.rows());
  if (n < 4) fail(ErrorKind::validation, "projection needs at least 4 entities");
  if (!(params.perplexity > 0.0) || params.perplexity >= static_cast<double>(n) / 3.0) {
    const double suggested = std::max(1.0, std::floor(static_cast<double>(n - 1) / 3.0));
    fail(ErrorKind::validation, "perplexity " + format_double(params.perplexity) + " too large for " +
                                    std::to_string(n) + " entities; try perplexity " + format_double(suggested));
  }
  if (params.iterations < 1) fail(ErrorKind::validation, "iterations must be at least 1");

  const Eigen::MatrixXd x = weighted_matrix(nm, ds, scheme);
  const Eigen::MatrixXd cond = detail::conditional_affinities(detail::squared_distances(x), params.perplexity);
  Eigen::MatrixXd p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);
  p.diagonal().setZero();

  Eigen::MatrixXd y = detail::principal_init(x);
  const double spread = std::sqrt(y.col(0).squaredNorm() / static_cast<double>(n));
  if (spread > 0.0) y *= 1e-4 / spread;
  std::mt19937_64 rng(params.seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
      y(i, c) += 1e-8 * u;
    }
  }

  const int exaggeration_iters = params.iterations / 4;
  const double exaggeration = 12.0;
  // n / (4 * exaggeration) keeps each step near the curvature of the
  // exaggerated attraction; a fixed floor makes small sessions oscillate
  const double learning_rate = static_cast<double>(n) / exaggeration / 4.0;
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd num(n, n);
  Eigen::MatrixXd grad(n, 2);

  for (int iter = 0; iter < params.iterations; ++iter) {
    const double exag = iter < exaggeration_iters ? exaggeration : 1.0;
    const double momentum = iter < exaggeration_iters ? 0.5 : 0.8;
    double zsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double q = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        num(i, j) = num(j, i) = q;
        zsum += 2.0 * q;
      }
    }
    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double coeff = (exag * p(i, j) - num(i, j) / zsum) * num(i, j);
        grad.row(i) += 4.0 * coeff * (y.row(i) - y.row(j));
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (velocity(i, c) > 0.0);
        gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
        velocity(i, c) = momentum * velocity(i, c) - learning_rate * gains(i, c) * grad(i, c);
        y(i, c) += velocity(i, c);
      }
    }
    y.rowwise() -= y.colwise().mean();
  }

  ProjectionResult out;
  out.scheme_id = scheme.id;
  out.ids = nm.entity_order();
  out.params = params;
  out.points.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(y(i, 0)) || !std::isfinite(y(i, 1))) fail(ErrorKind::internal, "projection diverged");
    out.points.push_back({y(i, 0), y(i, 1)});
  }
  return out;
}

}  // namespace ratewise
