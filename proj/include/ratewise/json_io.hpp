#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ratewise/constraints.hpp"
#include "ratewise/projection.hpp"
#include "ratewise/scoring.hpp"
#include "ratewise/svm.hpp"

// JSON shapes served over HTTP, written by the CLI and kept in session logs.
// Keys are camelCase to match what the web client consumes.

namespace ratewise {

using Json = nlohmann::ordered_json;

inline Json to_json(const DragEvent& d) {
  return Json{{"entityId", d.entity_id},
              {"fromRank", d.from_rank},
              {"toRank", d.to_rank},
              {"baseRanking", d.base_ranking}};
}

inline DragEvent drag_from_json(const Json& j) {
  try {
    DragEvent d;
    d.entity_id = j.at("entityId").get<std::string>();
    d.from_rank = j.at("fromRank").get<std::size_t>();
    d.to_rank = j.at("toRank").get<std::size_t>();
    d.base_ranking = j.at("baseRanking").get<std::vector<std::string>>();
    return d;
  } catch (const Json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed drag event: ") + e.what());
  }
}

inline Json to_json(const TrainingPair& p) {
  return Json{{"left", p.left_id}, {"right", p.right_id}, {"label", p.label},
              {"role", to_string(p.role)}, {"diff", p.diff}};
}

inline Json to_json(const std::vector<TrainingPair>& pairs) {
  Json arr = Json::array();
  for (const auto& p : pairs) arr.push_back(to_json(p));
  return arr;
}

inline Json to_json(const ConstraintSet& cs) {
  Json j{{"scheme", to_string(cs.scheme)}, {"drag", to_json(cs.source)}};
  if (cs.scheme == SchemeKind::type) {
    Json by_type = Json::object();
    for (const auto& [label, pairs] : cs.by_type) by_type[label] = to_json(pairs);
    j["pairsByType"] = std::move(by_type);
  } else {
    j["pairs"] = to_json(cs.pairs);
  }
  j["warnings"] = cs.warnings;
  return j;
}

inline Json to_json(const WeightVector& w) {
  return Json{{"w", w.w}, {"objective", w.objective}, {"iterations", w.iterations}};
}

inline Json to_json(const WeightScheme& s) {
  Json j{{"id", s.id}, {"kind", to_string(s.kind)}, {"label", s.label}};
  if (s.kind == SchemeKind::type) {
    Json by_type = Json::object();
    for (const auto& [label, w] : s.type_weights) by_type[label] = w;
    j["weightsByType"] = std::move(by_type);
  } else {
    j["weights"] = s.weights;
  }
  j["createdFrom"] = s.created_from ? to_json(*s.created_from) : Json(nullptr);
  return j;
}

inline WeightScheme scheme_from_json(const Json& j) {
  try {
    WeightScheme s;
    s.id = j.at("id").get<std::string>();
    s.kind = scheme_kind_from_string(j.at("kind").get<std::string>());
    s.label = j.value("label", "");
    if (s.kind == SchemeKind::type) {
      for (const auto& [label, w] : j.at("weightsByType").items()) {
        s.type_weights.emplace(label, w.get<std::vector<double>>());
      }
    } else {
      s.weights = j.at("weights").get<std::vector<double>>();
    }
    if (j.contains("createdFrom") && !j["createdFrom"].is_null()) s.created_from = drag_from_json(j["createdFrom"]);
    return s;
  } catch (const Json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed weight scheme: ") + e.what());
  }
}

inline Json to_json(const RankingResult& r, const Dataset& ds) {
  Json entries = Json::array();
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    const auto& entity = ds.entity(e.id);
    entries.push_back(Json{{"rank", e.rank},
                           {"id", e.id},
                           {"name", entity.name},
                           {"type", entity.type_label},
                           {"score", e.score},
                           {"roundedScore", r.segmentation.rounded_scores.at(i)},
                           {"rating", e.rating},
                           {"contributions", e.contributions},
                           {"raw", entity.raw}});
  }
  Json indicators = Json::array();
  for (const auto& ind : ds.schema().indicators) indicators.push_back(ind.name);
  return Json{{"schemeId", r.scheme_id},
              {"indicators", std::move(indicators)},
              {"breakpoints", r.segmentation.breakpoints},
              {"entries", std::move(entries)},
              {"warnings", r.warnings}};
}

inline Json to_json(const ProjectionResult& p) {
  Json points = Json::array();
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    points.push_back(Json{{"id", p.ids[i]}, {"x", p.points[i].x}, {"y", p.points[i].y}});
  }
  return Json{{"schemeId", p.scheme_id},
              {"params",
               Json{{"perplexity", p.params.perplexity}, {"iterations", p.params.iterations}, {"seed", p.params.seed}}},
              {"points", std::move(points)}};
}

}  // namespace ratewise
