#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "ratewise/projection.hpp"

using namespace ratewise;
using Catch::Matchers::ContainsSubstring;

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// 3 clusters of `per` rows, sigma 0.01 around the corners of a unit-side
// simplex. Every column carries signal, so min-max scaling keeps the gap.
std::pair<Dataset, std::vector<int>> three_clusters(std::size_t per, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.01);
  std::vector<std::vector<double>> rows;
  std::vector<int> truth;
  for (std::size_t i = 0; i < 3 * per; ++i) {
    std::vector<double> r(3, 0.0);
    r[i % 3] = std::sqrt(0.5);
    for (auto& v : r) v += g(rng);
    rows.push_back(r);
    truth.push_back(static_cast<int>(i % 3));
  }
  return {fixtures::dataset(rows), truth};
}

}  // namespace

TEST_CASE("projection rejects tiny inputs and oversized perplexity", "[projection]") {
  const auto small = fixtures::random_dataset(3, 2, 1);
  CHECK_THROWS_AS(project(normalize(small), small, default_scheme(2)), Error);
  const auto ds = fixtures::random_dataset(20, 3, 1);
  ProjectionParams p;
  p.perplexity = 10;
  CHECK_THROWS_WITH(project(normalize(ds), ds, default_scheme(3), p), ContainsSubstring("try perplexity 6"));
}

TEST_CASE("input clusters stay separated in the embedding", "[projection]") {
  const auto [ds, truth] = three_clusters(12, 3);
  // the oracle: in input space every within-cluster distance is far below
  // every between-cluster distance
  const auto nm = normalize(ds);
  double within = 0.0, between = 1e300;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < 3; ++k) d += (nm(i, k) - nm(j, k)) * (nm(i, k) - nm(j, k));
      if (truth[i] == truth[j]) within = std::max(within, d);
      else between = std::min(between, d);
    }
  }
  REQUIRE(within < between);

  const auto proj = project(nm, ds, default_scheme(3));
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : proj.points) pts.emplace_back(p.x, p.y);
  CHECK(oracles::purity(oracles::kmeans2d(pts, 3), truth, 3) >= 0.9);
}

TEST_CASE("duplicate rows embed as nearest neighbours", "[projection]") {
  auto rows = std::vector<std::vector<double>>{};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 30; ++i) rows.push_back({u(rng), u(rng), u(rng), u(rng)});
  rows[17] = rows[3];
  const auto ds = fixtures::dataset(rows);
  ProjectionParams params;
  params.perplexity = 9;
  const auto proj = project(normalize(ds), ds, default_scheme(4), params);
  const double dup = dist(proj.points[3], proj.points[17]);
  std::vector<double> all;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) all.push_back(dist(proj.points[i], proj.points[j]));
    if (i != 3 && i != 17) {
      CHECK(dup <= dist(proj.points[3], proj.points[i]));
      CHECK(dup <= dist(proj.points[17], proj.points[i]));
    }
  }
  std::sort(all.begin(), all.end());
  CHECK(dup <= all[all.size() / 100]);
}

TEST_CASE("projection is deterministic", "[projection]") {
  const auto ds = fixtures::random_dataset(30, 6, 9);
  const auto nm = normalize(ds);
  ProjectionParams p;
  p.perplexity = 9;
  const auto a = project(nm, ds, default_scheme(6), p);
  const auto b = project(nm, ds, default_scheme(6), p);
  CHECK(a == b);
  CHECK(a.ids == ds.ids());
  for (const auto& pt : a.points) CHECK((std::isfinite(pt.x) && std::isfinite(pt.y)));
}

TEST_CASE("type schemes project with per-type weights", "[projection]") {
  const auto ds = fixtures::random_dataset(16, 2, 5, {"A", "B"});
  const auto nm = normalize(ds);
  const auto v = weighted_matrix(nm, ds, fixtures::type_scheme({{"A", {2, 0}}}));
  CHECK(v(0, 0) == 2 * nm(0, 0));
  CHECK(v(0, 1) == 0.0);
  CHECK(v(1, 0) == 0.5 * nm(1, 0));  // B falls back to uniform
  CHECK_THROWS_AS(weighted_matrix(nm, ds, fixtures::global_scheme({1, 2, 3})), Error);
}
