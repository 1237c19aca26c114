#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ratewise/constraints.hpp"
#include "ratewise/core_data.hpp"
#include "ratewise/error.hpp"

namespace ratewise {

struct WeightScheme {
  std::string id;
  SchemeKind kind = SchemeKind::default_;
  std::string label;
  std::vector<double> weights;                              // all kinds but type
  std::map<std::string, std::vector<double>> type_weights;  // kind == type
  std::optional<DragEvent> created_from;

  bool operator==(const WeightScheme&) const = default;
};

inline WeightScheme default_scheme(std::size_t m) {
  WeightScheme s;
  s.id = "default";
  s.kind = SchemeKind::default_;
  s.label = "Default (uniform)";
  s.weights.assign(m, 1.0 / static_cast<double>(m));
  return s;
}

struct ScoredEntity {
  EntityId id;
  double score = 0.0;
  std::vector<double> contributions;
  std::size_t rank = 0;
  int rating = 0;  // 0 until assign_ratings

  bool operator==(const ScoredEntity&) const = default;
};

struct RatingSegmentation {
  std::vector<double> breakpoints;  // strictly increasing
  std::vector<int> rounded_scores;  // aligned with the scored list

  bool operator==(const RatingSegmentation&) const = default;
};

struct RankingResult {
  std::string scheme_id;
  std::vector<ScoredEntity> entries;  // ordered by rank
  RatingSegmentation segmentation;
  std::vector<std::string> warnings;

  std::vector<EntityId> ranking() const {
    std::vector<EntityId> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) ids.push_back(e.id);
    return ids;
  }

  const ScoredEntity* find(const EntityId& id) const {
    for (const auto& e : entries) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }

  bool operator==(const RankingResult&) const = default;
};

// Rank score w.d per entity with per-indicator contributions, ordered by
// descending score (ties by ascending id). Type schemes apply each
// entity's own type vector; entities whose type has no vector fall back to
// uniform weights and a warning is recorded.
inline std::vector<ScoredEntity> score(const NormalizedMatrix& nm, const Dataset& ds, const WeightScheme& scheme,
                                       std::vector<std::string>* warnings = nullptr) {
  const std::size_t m = ds.indicator_count();
  auto mismatch = [&] {
    fail(ErrorKind::validation, "scheme '" + scheme.id + "' has weights of the wrong dimension (expected " +
                                    std::to_string(m) + ")");
  };
  const std::vector<double> uniform(m, 1.0 / static_cast<double>(m));
  if (scheme.kind == SchemeKind::type) {
    for (const auto& [label, w] : scheme.type_weights) {
      if (w.size() != m) mismatch();
    }
  } else if (scheme.weights.size() != m) {
    mismatch();
  }

  std::vector<std::string> missing;
  std::vector<ScoredEntity> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& entity = ds.entities()[i];
    const std::vector<double>* w = &scheme.weights;
    if (scheme.kind == SchemeKind::type) {
      auto it = scheme.type_weights.find(entity.type_label);
      if (it != scheme.type_weights.end()) {
        w = &it->second;
      } else {
        w = &uniform;
        if (std::find(missing.begin(), missing.end(), entity.type_label) == missing.end()) {
          missing.push_back(entity.type_label);
        }
      }
    }
    ScoredEntity se;
    se.id = entity.id;
    se.contributions.resize(m);
    const auto row = nm.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      se.contributions[j] = (*w)[j] * row[j];
      se.score += se.contributions[j];
    }
    out.push_back(std::move(se));
  }
  std::sort(out.begin(), out.end(), [](const ScoredEntity& a, const ScoredEntity& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  for (std::size_t r = 0; r < out.size(); ++r) out[r].rank = r + 1;
  if (warnings) {
    for (const auto& label : missing) {
      warnings->push_back("scheme '" + scheme.id + "' has no weights for type '" + label +
                          "'; uniform weights applied");
    }
  }
  return out;
}

// Rescales scores linearly onto [0, 100] and floors each to a multiple of 5.
// All-equal scores map to 50.
inline std::vector<int> round_scores(std::span<const double> scores) {
  std::vector<int> out(scores.size(), 50);
  if (scores.empty()) return out;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double scaled = (scores[i] - *lo) * 100.0 / range;
    // the 1e-9 slack keeps exact multiples of 5 from flooring one step down
    const int bucket = static_cast<int>(std::floor((scaled + 1e-9) / 5.0));
    out[i] = std::clamp(bucket * 5, 0, 100);
  }
  return out;
}

inline std::vector<int> round_scores(const std::vector<ScoredEntity>& scored) {
  std::vector<double> scores;
  scores.reserve(scored.size());
  for (const auto& s : scored) scores.push_back(s.score);
  return round_scores(scores);
}

// Natural-log Shannon entropy of a segment given per-value counts.
inline double segment_entropy(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

// Greedy entropy-minimizing segmentation of rounded scores.
//
// Every distinct value except the largest is a candidate breakpoint; a
// breakpoint u sends values <= u left and values > u right. Each of up to 4
// rounds commits the unused candidate minimizing the size-weighted entropy
// summed over all segments of the resulting partition (ties to the smaller
// u). Returns breakpoints in ascending order.
inline std::vector<double> entropy_split(std::span<const int> rounded, std::size_t max_breakpoints = 4) {
  if (rounded.empty()) return {};
  std::map<int, std::size_t> histogram;
  for (int v : rounded) ++histogram[v];
  std::vector<int> values;
  std::vector<std::size_t> counts;
  for (const auto& [v, c] : histogram) {
    values.push_back(v);
    counts.push_back(c);
  }
  const std::size_t k = values.size();
  const double n = static_cast<double>(rounded.size());

  // Segment = half-open range of distinct-value indices. A breakpoint at
  // index c closes a segment after c.
  auto weighted = [&](std::size_t lo, std::size_t hi) {
    const std::span<const std::size_t> seg(counts.data() + lo, hi - lo);
    std::size_t size = 0;
    for (auto c : seg) size += c;
    return static_cast<double>(size) / n * segment_entropy(seg);
  };

  std::vector<bool> is_break(k, false);
  std::vector<double> out;
  for (std::size_t round = 0; round < max_breakpoints; ++round) {
    // current segment boundaries
    std::vector<std::size_t> bounds{0};
    for (std::size_t c = 0; c < k; ++c) {
      if (is_break[c]) bounds.push_back(c + 1);
    }
    bounds.push_back(k);
    std::vector<double> seg_cost(bounds.size() - 1);
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < bounds.size(); ++s) total += seg_cost[s] = weighted(bounds[s], bounds[s + 1]);

    std::optional<std::size_t> best;
    double best_total = 0.0;
    std::size_t s = 0;
    for (std::size_t c = 0; c + 1 < k; ++c) {
      while (c >= bounds[s + 1]) ++s;
      if (is_break[c]) continue;
      const double candidate =
          total - seg_cost[s] + weighted(bounds[s], c + 1) + weighted(c + 1, bounds[s + 1]);
      if (!best || candidate < best_total - 1e-12) {
        best = c;
        best_total = candidate;
      }
    }
    if (!best) break;
    is_break[*best] = true;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (is_break[c]) out.push_back(values[c]);
  }
  return out;
}

inline RatingSegmentation segment(const std::vector<ScoredEntity>& scored) {
  RatingSegmentation seg;
  seg.rounded_scores = round_scores(scored);
  seg.breakpoints = entropy_split(seg.rounded_scores);
  return seg;
}

// Rating 1 is the top segment; values above b breakpoints fall b segments
// further up.
inline int rating_for(double rounded, std::span<const double> breakpoints) {
  std::size_t above = 0;
  for (double b : breakpoints) {
    if (rounded > b) ++above;
  }
  return static_cast<int>(breakpoints.size() - above) + 1;
}

inline void assign_ratings(std::vector<ScoredEntity>& scored, const RatingSegmentation& seg) {
  if (seg.rounded_scores.size() != scored.size()) {
    fail(ErrorKind::internal, "segmentation does not match the scored list");
  }
  for (std::size_t i = 0; i < scored.size(); ++i) {
    scored[i].rating = rating_for(seg.rounded_scores[i], seg.breakpoints);
  }
}

inline RankingResult rank_and_rate(const NormalizedMatrix& nm, const Dataset& ds, const WeightScheme& scheme) {
  RankingResult result;
  result.scheme_id = scheme.id;
  result.entries = score(nm, ds, scheme, &result.warnings);
  result.segmentation = segment(result.entries);
  assign_ratings(result.entries, result.segmentation);
  return result;
}

}  // namespace ratewise
