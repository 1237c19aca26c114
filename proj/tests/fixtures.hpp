#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ratewise/core_data.hpp"
#include "ratewise/scoring.hpp"

namespace fixtures {

inline std::string entity_name(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "e%03zu", i);
  return buf;
}

inline ratewise::IndicatorSchema schema(std::size_t m) {
  ratewise::IndicatorSchema s;
  for (std::size_t j = 0; j < m; ++j) s.indicators.push_back({"x" + std::to_string(j), ""});
  return s;
}

// Rows become entities e000, e001, ...; types cycle through `types`.
inline ratewise::Dataset dataset(const std::vector<std::vector<double>>& rows,
                                 const std::vector<std::string>& types = {"A"}) {
  std::vector<ratewise::Entity> es;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    es.push_back({entity_name(i), entity_name(i), types[i % types.size()], rows[i]});
  }
  return ratewise::Dataset(schema(rows.front().size()), std::move(es));
}

inline ratewise::Dataset random_dataset(std::size_t n, std::size_t m, std::uint64_t seed,
                                        const std::vector<std::string>& types = {"A", "B", "C", "D"}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(m));
  for (auto& r : rows) {
    for (auto& v : r) v = u(rng);
  }
  return dataset(rows, types);
}

// Bank-like synthetic indicators: every indicator loads on one latent quality
// factor (the last one negatively, like a non-performing-loan ratio) plus
// idiosyncratic noise.
inline ratewise::Dataset bank_like_dataset(std::size_t n, std::size_t m, std::uint64_t seed, double loading = 0.7,
                                           const std::vector<std::string>& types = {"A", "B", "C", "D"}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const double noise = std::sqrt(1.0 - loading * loading);
  std::vector<std::vector<double>> rows(n, std::vector<double>(m));
  for (auto& r : rows) {
    const double quality = g(rng);
    for (std::size_t j = 0; j < m; ++j) r[j] = (j + 1 == m ? -1.0 : 1.0) * loading * quality + noise * g(rng);
  }
  return dataset(rows, types);
}

inline std::vector<std::string> ranking_by(const ratewise::Dataset& ds, const ratewise::WeightScheme& s) {
  const auto nm = ratewise::normalize(ds);
  return ratewise::rank_and_rate(nm, ds, s).ranking();
}

inline ratewise::WeightScheme global_scheme(std::vector<double> w, std::string id = "g") {
  ratewise::WeightScheme s;
  s.id = std::move(id);
  s.kind = ratewise::SchemeKind::global;
  s.weights = std::move(w);
  return s;
}

inline ratewise::WeightScheme type_scheme(std::map<std::string, std::vector<double>> w, std::string id = "t") {
  ratewise::WeightScheme s;
  s.id = std::move(id);
  s.kind = ratewise::SchemeKind::type;
  s.type_weights = std::move(w);
  return s;
}

inline std::vector<std::string> restrict_to_type(const std::vector<std::string>& ranking, const ratewise::Dataset& ds,
                                                 const std::string& type) {
  std::vector<std::string> out;
  for (const auto& id : ranking) {
    if (ds.entity(id).type_label == type) out.push_back(id);
  }
  return out;
}

}  // namespace fixtures
