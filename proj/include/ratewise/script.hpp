#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ratewise/kendall.hpp"
#include "ratewise/session.hpp"

namespace ratewise {

struct ScriptStep {
  struct Drag {
    EntityId entity_id;
    std::size_t to_rank = 0;
    std::optional<std::size_t> from_rank;
    std::string base_scheme;
  };
  struct Save {
    SchemeKind which = SchemeKind::type;
    std::string label;
  };
  std::optional<Drag> drag;
  std::optional<Save> save;
};

struct InteractionScript {
  std::filesystem::path dataset_path;
  std::filesystem::path output_dir;
  std::vector<ScriptStep> steps;
};

// Parses a script document. Relative paths resolve against `base_dir`.
//
//   {"datasetPath": "banks.csv", "outputDir": "out",
//    "steps": [{"drag": {"entityId": "X", "toRank": 13},
//               "save": {"which": "type", "label": "optional"}}]}
inline InteractionScript parse_script(const Json& j, const std::filesystem::path& base_dir = {}) {
  InteractionScript s;
  try {
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    s.dataset_path = resolve(j.at("datasetPath").get<std::string>());
    s.output_dir = resolve(j.value("outputDir", std::string("out")));
    for (const auto& step_json : j.at("steps")) {
      ScriptStep step;
      if (step_json.contains("drag")) {
        const auto& d = step_json["drag"];
        ScriptStep::Drag drag;
        drag.entity_id = d.at("entityId").get<std::string>();
        const auto to = d.at("toRank").get<long long>();
        if (to < 1) fail(ErrorKind::validation, "toRank must be at least 1");
        drag.to_rank = static_cast<std::size_t>(to);
        if (d.contains("fromRank")) drag.from_rank = d["fromRank"].get<std::size_t>();
        drag.base_scheme = d.value("baseScheme", std::string{});
        step.drag = std::move(drag);
      }
      if (step_json.contains("save")) {
        const auto& sv = step_json["save"];
        step.save = ScriptStep::Save{scheme_kind_from_string(sv.at("which").get<std::string>()),
                                     sv.value("label", std::string{})};
      }
      if (!step.drag && !step.save) fail(ErrorKind::validation, "script step needs a drag and/or a save");
      s.steps.push_back(std::move(step));
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed script: ") + e.what());
  }
  return s;
}

inline InteractionScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::validation, "cannot read script " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed script: ") + e.what());
  }
  return parse_script(j, path.parent_path());
}

inline void write_ranking_csv(const RankingResult& r, const Dataset& ds, std::ostream& out) {
  out << "rank,id,type,score,rounded_score,rating";
  for (const auto& ind : ds.schema().indicators) out << ",contrib_" << detail::quote_field(ind.name);
  out << '\n';
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    out << e.rank << ',' << detail::quote_field(e.id) << ',' << detail::quote_field(ds.entity(e.id).type_label) << ','
        << format_double(e.score) << ',' << r.segmentation.rounded_scores[i] << ',' << e.rating;
    for (double c : e.contributions) out << ',' << format_double(c);
    out << '\n';
  }
}

struct ScriptReport {
  std::shared_ptr<Session> session;
  std::vector<std::string> scheme_ids;
  std::vector<std::vector<double>> tau;  // scheme_ids x scheme_ids
  std::vector<std::filesystem::path> files;
};

inline Json tau_json(const ScriptReport& report) {
  return Json{{"schemes", report.scheme_ids}, {"matrix", report.tau}};
}

// Runs every step through the same session pipeline the service uses, then
// writes rankings/<scheme>.csv, projections/<scheme>.json,
// comparison.json (when a scheme was saved) and kendall_tau.json.
inline ScriptReport run_script(const InteractionScript& script, const PipelineConfig& cfg = {}) {
  std::ifstream csv(script.dataset_path);
  if (!csv) fail(ErrorKind::validation, "cannot read dataset " + script.dataset_path.string());
  ScriptReport report;
  report.session = std::make_shared<Session>("script", ingest(csv), cfg);
  auto& session = *report.session;

  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& step = script.steps[i];
    try {
      if (step.drag) {
        session.submit_drag(step.drag->entity_id, step.drag->to_rank, step.drag->from_rank, step.drag->base_scheme);
      }
      if (step.save) session.save_scheme(step.save->which, step.save->label);
    } catch (const Error& e) {
      fail(e.kind(), "step " + std::to_string(i + 1) + ": " + e.what());
    }
  }

  const auto schemes = session.schemes();
  std::vector<std::vector<EntityId>> rankings;
  for (const auto& s : schemes) {
    report.scheme_ids.push_back(s.id);
    rankings.push_back(session.ranking(s.id).ranking());
  }
  report.tau.assign(schemes.size(), std::vector<double>(schemes.size(), 1.0));
  for (std::size_t a = 0; a < schemes.size(); ++a) {
    for (std::size_t b = 0; b < schemes.size(); ++b) {
      if (a != b) report.tau[a][b] = kendall_tau(rankings[a], rankings[b]);
    }
  }

  const auto& out = script.output_dir;
  std::filesystem::create_directories(out / "rankings");
  std::filesystem::create_directories(out / "projections");
  auto write = [&](const std::filesystem::path& path, auto&& emit) {
    std::ofstream f(path);
    if (!f) fail(ErrorKind::internal, "cannot write " + path.string());
    emit(f);
    report.files.push_back(path);
  };
  for (const auto& s : schemes) {
    write(out / "rankings" / (s.id + ".csv"),
          [&](std::ostream& f) { write_ranking_csv(session.ranking(s.id), session.dataset(), f); });
    write(out / "projections" / (s.id + ".json"),
          [&](std::ostream& f) { f << to_json(session.projection(s.id)).dump(2) << '\n'; });
  }
  if (schemes.size() > 1) {
    write(out / "comparison.json", [&](std::ostream& f) { f << session.comparison().dump(2) << '\n'; });
  }
  write(out / "kendall_tau.json", [&](std::ostream& f) { f << tau_json(report).dump(2) << '\n'; });
  return report;
}

}  // namespace ratewise
