#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "ratewise/constraints.hpp"
#include "ratewise/core_data.hpp"
#include "ratewise/json_io.hpp"
#include "ratewise/projection.hpp"
#include "ratewise/scoring.hpp"
#include "ratewise/svm.hpp"

namespace ratewise {

struct PipelineConfig {
  TrainerConfig trainer;
  ProjectionParams projection;
};

// Largest perplexity accepted for n entities, capped at the requested value.
inline ProjectionParams fit_projection_params(ProjectionParams params, std::size_t n) {
  const double limit = std::max(1.0, std::floor(static_cast<double>(n - 1) / 3.0));
  if (params.perplexity >= static_cast<double>(n) / 3.0) params.perplexity = limit;
  return params;
}

// One trained candidate of a drag preview. `scheme` and `result` are empty
// when training for this scheme failed; `error` then says why.
struct SchemeCandidate {
  SchemeKind kind = SchemeKind::local;
  std::optional<ConstraintSet> constraints;
  std::optional<WeightScheme> scheme;
  std::optional<RankingResult> result;
  std::map<std::string, WeightVector> training;  // "" for single-vector schemes
  std::vector<std::string> warnings;
  std::string error;

  bool ok() const { return scheme.has_value(); }
};

struct Preview {
  std::uint64_t drag_seq = 0;
  std::string base_scheme_id;
  DragEvent drag;
  std::array<SchemeCandidate, 3> candidates;  // local, global, type

  const SchemeCandidate& candidate(SchemeKind kind) const {
    for (const auto& c : candidates) {
      if (c.kind == kind) return c;
    }
    fail(ErrorKind::validation, "no candidate for scheme kind '" + std::string(to_string(kind)) + "'");
  }
};

struct AuditEntry {
  std::string timestamp;
  std::string action;  // "drag" | "save"
  std::optional<DragEvent> drag;
  std::string base_scheme_id;
  std::string which;
  std::string label;
  std::string scheme_id;
  std::optional<WeightScheme> scheme;  // snapshot of what the save produced
};

inline Json to_json(const AuditEntry& e) {
  Json j{{"timestamp", e.timestamp}, {"action", e.action}};
  if (e.action == "drag") {
    j["drag"] = to_json(*e.drag);
    j["baseScheme"] = e.base_scheme_id;
  } else {
    j["which"] = e.which;
    j["label"] = e.label;
    j["schemeId"] = e.scheme_id;
    if (e.scheme) j["scheme"] = to_json(*e.scheme);
  }
  return j;
}

inline AuditEntry audit_from_json(const Json& j) {
  try {
    AuditEntry e;
    e.timestamp = j.value("timestamp", "");
    e.action = j.at("action").get<std::string>();
    if (e.action == "drag") {
      e.drag = drag_from_json(j.at("drag"));
      e.base_scheme_id = j.value("baseScheme", "");
    } else if (e.action == "save") {
      e.which = j.at("which").get<std::string>();
      e.label = j.value("label", "");
      e.scheme_id = j.value("schemeId", "");
      if (j.contains("scheme")) e.scheme = scheme_from_json(j["scheme"]);
    } else {
      fail(ErrorKind::validation, "unknown audit action '" + e.action + "'");
    }
    return e;
  } catch (const Json::exception& ex) {
    fail(ErrorKind::validation, std::string("malformed audit entry: ") + ex.what());
  }
}

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

// Five-number summary with linearly interpolated quartiles.
inline BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  b.count = values.size();
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  b.min = values.front();
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  b.max = values.back();
  return b;
}

inline Json to_json(const BoxStats& b) {
  if (b.count == 0) return nullptr;
  return Json{{"min", b.min}, {"q1", b.q1}, {"median", b.median}, {"q3", b.q3}, {"max", b.max}, {"count", b.count}};
}

struct SampleSummary {
  EntityId dragged;
  std::map<EntityId, SampleRole> roles;  // entities sampled relative to the drag
  // per indicator: {negative, positive}
  std::vector<std::array<BoxStats, 2>> boxes;
};

// Roles and indicator distributions (normalized values) of the entities
// paired with the dragged entity's side in a constraint set.
inline SampleSummary summarize_samples(const ConstraintSet& cs, const Dataset& ds, const NormalizedMatrix& nm) {
  SampleSummary s;
  s.dragged = cs.source.entity_id;
  auto visit = [&](const std::vector<TrainingPair>& pairs) {
    for (const auto& p : pairs) {
      if (p.role == SampleRole::none) continue;
      for (const auto* id : {&p.left_id, &p.right_id}) {
        if (*id != s.dragged) s.roles.emplace(*id, p.role);
      }
    }
  };
  visit(cs.pairs);
  for (const auto& [label, pairs] : cs.by_type) visit(pairs);

  const std::size_t m = ds.indicator_count();
  s.boxes.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> neg;
    std::vector<double> pos;
    for (const auto& [id, role] : s.roles) {
      const double v = nm(ds.index_of(id), j);
      (role == SampleRole::positive ? pos : neg).push_back(v);
    }
    s.boxes[j] = {box_stats(std::move(neg)), box_stats(std::move(pos))};
  }
  return s;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// A dataset plus the weight schemes an analyst has accumulated on it.
//
// Reads take a shared lock; drags and saves take an exclusive one, so
// mutations on one session are applied in arrival order. An optional log
// path receives every audit entry as one JSON line.
class Session {
 public:
  Session(std::string id, Dataset dataset, PipelineConfig cfg = {}, std::filesystem::path log_path = {})
      : id_(std::move(id)),
        dataset_(std::make_shared<const Dataset>(std::move(dataset))),
        matrix_(std::make_shared<const NormalizedMatrix>(normalize(*dataset_))),
        cfg_(cfg),
        log_path_(std::move(log_path)) {
    cfg_.trainer.validate();
    auto def = default_scheme(dataset_->indicator_count());
    results_.emplace(def.id, rank_and_rate(*matrix_, *dataset_, def));
    schemes_.push_back(std::move(def));
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const noexcept { return id_; }
  const Dataset& dataset() const noexcept { return *dataset_; }
  const NormalizedMatrix& matrix() const noexcept { return *matrix_; }
  const PipelineConfig& config() const noexcept { return cfg_; }

  std::vector<WeightScheme> schemes() const {
    std::shared_lock lock(mu_);
    return schemes_;
  }

  std::vector<AuditEntry> audit_log() const {
    std::shared_lock lock(mu_);
    return audit_;
  }

  std::optional<Preview> pending_preview() const {
    std::shared_lock lock(mu_);
    return preview_;
  }

  RankingResult ranking(const std::string& scheme_id = {}) const {
    std::shared_lock lock(mu_);
    const auto& id = scheme_id.empty() ? schemes_.back().id : scheme_id;
    auto it = results_.find(id);
    if (it == results_.end()) fail(ErrorKind::not_found, "unknown scheme '" + id + "'");
    return it->second;
  }

  // Builds the drag from the ranking of `base_scheme_id` (latest saved
  // scheme when empty). A supplied from_rank must match that ranking.
  Preview submit_drag(const EntityId& entity, std::size_t to_rank, std::optional<std::size_t> from_rank = {},
                      std::string base_scheme_id = {}) {
    std::unique_lock lock(mu_);
    if (base_scheme_id.empty()) base_scheme_id = schemes_.back().id;
    auto it = results_.find(base_scheme_id);
    if (it == results_.end()) fail(ErrorKind::not_found, "unknown scheme '" + base_scheme_id + "'");
    if (!dataset_->find(entity)) fail(ErrorKind::not_found, "unknown entity '" + entity + "'");
    DragEvent drag;
    drag.entity_id = entity;
    drag.base_ranking = it->second.ranking();
    drag.from_rank = static_cast<std::size_t>(
                         std::find(drag.base_ranking.begin(), drag.base_ranking.end(), entity) -
                         drag.base_ranking.begin()) + 1;
    if (from_rank && *from_rank != drag.from_rank) {
      fail(ErrorKind::validation, "fromRank " + std::to_string(*from_rank) + " does not match current rank " +
                                      std::to_string(drag.from_rank) + " of '" + entity + "'");
    }
    drag.to_rank = to_rank;
    return submit_locked(drag, base_scheme_id);
  }

  Preview submit_drag(const DragEvent& drag, const std::string& base_scheme_id = {}) {
    std::unique_lock lock(mu_);
    return submit_locked(drag, base_scheme_id);
  }

  // Consumes the pending preview, appending the chosen candidate.
  WeightScheme save_scheme(SchemeKind which, std::string label = {}) {
    std::unique_lock lock(mu_);
    if (!preview_) fail(ErrorKind::conflict, "no pending preview to save");
    if (which == SchemeKind::default_) fail(ErrorKind::validation, "only local, global or type can be saved");
    const auto& cand = preview_->candidate(which);
    if (!cand.ok()) {
      fail(ErrorKind::conflict, "scheme '" + std::string(to_string(which)) + "' failed to train: " + cand.error);
    }
    const std::size_t number = schemes_.size();
    WeightScheme scheme = *cand.scheme;
    scheme.id = "scheme-" + std::to_string(number);
    scheme.label = label.empty() ? "Scheme " + std::to_string(number) + " (" + std::string(to_string(which)) + ")"
                                 : std::move(label);
    RankingResult result = *cand.result;
    result.scheme_id = scheme.id;
    for (auto& w : result.warnings) w = "scheme '" + scheme.id + "': " + w;

    AuditEntry entry;
    entry.timestamp = utc_timestamp();
    entry.action = "save";
    entry.which = std::string(to_string(which));
    entry.label = scheme.label;
    entry.scheme_id = scheme.id;
    entry.scheme = scheme;
    append_audit(std::move(entry));

    constraints_.emplace(scheme.id, *cand.constraints);
    results_.emplace(scheme.id, std::move(result));
    schemes_.push_back(scheme);
    preview_.reset();
    projections_.emplace(scheme.id, compute_projection(scheme));
    return scheme;
  }

  ProjectionResult projection(const std::string& scheme_id) {
    {
      std::shared_lock lock(mu_);
      auto it = projections_.find(scheme_id);
      if (it != projections_.end()) return it->second;
    }
    std::unique_lock lock(mu_);
    auto it = projections_.find(scheme_id);
    if (it != projections_.end()) return it->second;
    const auto& scheme = find_scheme(scheme_id);
    return projections_.emplace(scheme_id, compute_projection(scheme)).first->second;
  }

  ProjectionResult compute_projection(const WeightScheme& scheme) const {
    return project(*matrix_, *dataset_, scheme, fit_projection_params(cfg_.projection, dataset_->size()));
  }

  Json comparison() const;

  void attach_log(std::filesystem::path log_path) {
    std::unique_lock lock(mu_);
    log_path_ = std::move(log_path);
  }

  Json summary() const {
    std::shared_lock lock(mu_);
    Json schemes = Json::array();
    for (const auto& s : schemes_) schemes.push_back(to_json(s));
    Json indicators = Json::array();
    for (const auto& ind : dataset_->schema().indicators) indicators.push_back({{"name", ind.name}, {"unit", ind.unit}});
    return Json{{"id", id_},
                {"entityCount", dataset_->size()},
                {"indicators", std::move(indicators)},
                {"typeLabels", dataset_->type_labels()},
                {"schemes", std::move(schemes)},
                {"pendingPreview", preview_.has_value()}};
  }

  // Re-executes an audit log against a fresh session over the same data.
  static std::unique_ptr<Session> replay(std::string id, Dataset dataset, const std::vector<AuditEntry>& log,
                                         PipelineConfig cfg = {}, std::filesystem::path log_path = {}) {
    auto session = std::make_unique<Session>(std::move(id), std::move(dataset), cfg, std::move(log_path));
    for (std::size_t i = 0; i < log.size(); ++i) {
      const auto& e = log[i];
      try {
        if (e.action == "drag") {
          session->submit_drag(*e.drag, e.base_scheme_id);
        } else {
          session->save_scheme(scheme_kind_from_string(e.which), e.label);
        }
      } catch (const Error& err) {
        fail(err.kind(), "replay step " + std::to_string(i + 1) + ": " + err.what());
      }
    }
    return session;
  }

 private:
  const WeightScheme& find_scheme(const std::string& scheme_id) const {
    for (const auto& s : schemes_) {
      if (s.id == scheme_id) return s;
    }
    fail(ErrorKind::not_found, "unknown scheme '" + scheme_id + "'");
  }

  SchemeCandidate build_candidate(SchemeKind kind, const DragEvent& drag) const {
    SchemeCandidate cand;
    cand.kind = kind;
    try {
      cand.constraints = derive(kind, drag, *dataset_, *matrix_);
      cand.warnings = cand.constraints->warnings;
      WeightScheme scheme;
      scheme.id = "preview-" + std::string(to_string(kind));
      scheme.kind = kind;
      scheme.label = "Preview (" + std::string(to_string(kind)) + ")";
      scheme.created_from = drag;
      if (kind == SchemeKind::type) {
        auto per_type = train_per_type(*cand.constraints, cfg_.trainer);
        for (const auto& [label, why] : per_type.failures) {
          cand.warnings.push_back("type '" + label + "' not trained: " + why);
        }
        if (per_type.weights.empty()) fail(ErrorKind::validation, "no type could be trained");
        for (auto& [label, wv] : per_type.weights) {
          scheme.type_weights.emplace(label, wv.w);
          cand.training.emplace(label, std::move(wv));
        }
      } else {
        auto wv = train(cand.constraints->pairs, cfg_.trainer);
        scheme.weights = wv.w;
        cand.training.emplace("", std::move(wv));
      }
      cand.result = rank_and_rate(*matrix_, *dataset_, scheme);
      cand.scheme = std::move(scheme);
    } catch (const Error& e) {
      cand.error = e.what();
      cand.scheme.reset();
      cand.result.reset();
    }
    return cand;
  }

  Preview submit_locked(const DragEvent& drag, std::string base_scheme_id) {
    validate_drag(drag, *dataset_);
    Preview preview;
    preview.drag_seq = ++drag_seq_;
    preview.drag = drag;
    preview.base_scheme_id = std::move(base_scheme_id);
    preview.candidates = {build_candidate(SchemeKind::local, drag), build_candidate(SchemeKind::global, drag),
                          build_candidate(SchemeKind::type, drag)};
    AuditEntry entry;
    entry.timestamp = utc_timestamp();
    entry.action = "drag";
    entry.drag = drag;
    entry.base_scheme_id = preview.base_scheme_id;
    append_audit(std::move(entry));
    preview_ = preview;
    return preview;
  }

  void append_audit(AuditEntry entry) {
    if (!log_path_.empty()) {
      std::ofstream out(log_path_, std::ios::app);
      if (!out) fail(ErrorKind::internal, "cannot append to session log " + log_path_.string());
      out << to_json(entry).dump() << '\n';
    }
    audit_.push_back(std::move(entry));
  }

  std::string id_;
  std::shared_ptr<const Dataset> dataset_;
  std::shared_ptr<const NormalizedMatrix> matrix_;
  PipelineConfig cfg_;
  std::filesystem::path log_path_;

  mutable std::shared_mutex mu_;
  std::vector<WeightScheme> schemes_;
  std::map<std::string, RankingResult> results_;
  std::map<std::string, ConstraintSet> constraints_;
  std::map<std::string, ProjectionResult> projections_;
  std::vector<AuditEntry> audit_;
  std::optional<Preview> preview_;
  std::uint64_t drag_seq_ = 0;
};

inline Json weights_json(const WeightScheme& s) {
  if (s.kind != SchemeKind::type) return s.weights;
  Json by_type = Json::object();
  for (const auto& [label, w] : s.type_weights) by_type[label] = w;
  return by_type;
}

inline Json samples_json(const SampleSummary& summary, const Dataset& ds) {
  Json roles = Json::array();
  for (const auto& id : ds.ids()) {
    auto it = summary.roles.find(id);
    roles.push_back(id == summary.dragged ? "dragged"
                                          : it == summary.roles.end() ? "none" : std::string(to_string(it->second)));
  }
  Json boxes = Json::array();
  for (std::size_t j = 0; j < summary.boxes.size(); ++j) {
    boxes.push_back(Json{{"indicator", ds.schema().indicators[j].name},
                         {"negative", to_json(summary.boxes[j][0])},
                         {"positive", to_json(summary.boxes[j][1])}});
  }
  return Json{{"draggedEntity", summary.dragged}, {"sampleRoles", std::move(roles)}, {"boxStats", std::move(boxes)}};
}

// Parallel-axes comparison over every saved scheme, default first. Entity
// arrays are aligned with `entities` (dataset order). Top-level sample data
// describes the most recently saved scheme; each axis also carries its own.
inline Json Session::comparison() const {
  std::shared_lock lock(mu_);
  if (schemes_.size() < 2) fail(ErrorKind::conflict, "no saved schemes to compare yet");
  const auto ids = dataset_->ids();
  Json axes = Json::array();
  Json curve = Json::array();
  std::vector<std::vector<long long>> ranks;
  for (const auto& s : schemes_) {
    const auto& res = results_.at(s.id);
    std::map<EntityId, const ScoredEntity*> by_id;
    for (const auto& e : res.entries) by_id.emplace(e.id, &e);
    std::vector<long long> r;
    std::vector<int> ratings;
    for (const auto& id : ids) {
      r.push_back(static_cast<long long>(by_id.at(id)->rank));
      ratings.push_back(by_id.at(id)->rating);
    }
    Json axis{{"schemeId", s.id}, {"label", s.label}, {"kind", to_string(s.kind)}, {"ranks", r}, {"ratings", ratings},
              {"breakpoints", res.segmentation.breakpoints}};
    auto cs = constraints_.find(s.id);
    axis["samples"] = cs == constraints_.end() ? Json(nullptr)
                                               : samples_json(summarize_samples(cs->second, *dataset_, *matrix_), *dataset_);
    axes.push_back(std::move(axis));
    curve.push_back(Json{{"schemeId", s.id}, {"weights", weights_json(s)}});
    ranks.push_back(std::move(r));
  }
  Json deltas = Json::array();
  for (std::size_t a = 0; a + 1 < ranks.size(); ++a) {
    std::vector<long long> d;
    std::vector<std::string> dir;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      // positive: moved up (smaller rank number) on the right-hand axis
      const long long delta = ranks[a][i] - ranks[a + 1][i];
      d.push_back(delta);
      dir.push_back(delta > 0 ? "up" : delta < 0 ? "down" : "neutral");
    }
    deltas.push_back(Json{{"from", schemes_[a].id}, {"to", schemes_[a + 1].id}, {"rankDelta", d}, {"direction", dir}});
  }
  Json types = Json::array();
  for (const auto& e : dataset_->entities()) types.push_back(e.type_label);
  Json indicators = Json::array();
  for (const auto& ind : dataset_->schema().indicators) indicators.push_back(ind.name);

  Json bundle{{"entities", ids}, {"types", std::move(types)}, {"indicators", std::move(indicators)},
              {"axes", std::move(axes)}, {"rankDeltas", std::move(deltas)}, {"weightsCurve", std::move(curve)}};
  const auto& latest = constraints_.at(schemes_.back().id);
  const auto top = samples_json(summarize_samples(latest, *dataset_, *matrix_), *dataset_);
  for (const auto& [k, v] : top.items()) bundle[k] = v;
  return bundle;
}

// Owns all live sessions. With a data directory, each session keeps its
// uploaded dataset and an append-only audit log under <dir>/<id>/, and
// load_all() restores sessions by replaying those logs.
class SessionStore {
 public:
  explicit SessionStore(PipelineConfig cfg = {}, std::filesystem::path data_dir = {})
      : cfg_(cfg), data_dir_(std::move(data_dir)) {}

  std::shared_ptr<Session> create(Dataset dataset) {
    std::string id = new_id();
    std::filesystem::path log;
    if (!data_dir_.empty()) {
      const auto dir = data_dir_ / id;
      std::filesystem::create_directories(dir);
      std::ofstream(dir / "dataset.csv") << export_csv(dataset);
      log = dir / "audit.jsonl";
      std::ofstream(log, std::ios::app).flush();
    }
    auto session = std::make_shared<Session>(id, std::move(dataset), cfg_, log);
    std::unique_lock lock(mu_);
    sessions_.emplace(id, session);
    return session;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorKind::not_found, "unknown session '" + id + "'");
    return it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return sessions_.size();
  }

  // Restores every session found in the data directory. Returns the ids
  // that could not be restored along with the reason.
  std::map<std::string, std::string> load_all() {
    std::map<std::string, std::string> failures;
    if (data_dir_.empty() || !std::filesystem::exists(data_dir_)) return failures;
    for (const auto& entry : std::filesystem::directory_iterator(data_dir_)) {
      if (!entry.is_directory()) continue;
      const auto id = entry.path().filename().string();
      try {
        std::ifstream csv(entry.path() / "dataset.csv");
        if (!csv) fail(ErrorKind::validation, "missing dataset.csv");
        Dataset ds = ingest(csv);
        std::vector<AuditEntry> log;
        std::ifstream in(entry.path() / "audit.jsonl");
        std::string line;
        while (std::getline(in, line)) {
          if (!line.empty()) log.push_back(audit_from_json(Json::parse(line)));
        }
        // replay without logging, then resume appending to the existing file
        std::shared_ptr<Session> restored = Session::replay(id, std::move(ds), log, cfg_);
        restored->attach_log(entry.path() / "audit.jsonl");
        std::unique_lock lock(mu_);
        sessions_[id] = std::move(restored);
      } catch (const std::exception& e) {
        failures.emplace(id, e.what());
      }
    }
    return failures;
  }

 private:
  std::string new_id() {
    std::lock_guard lock(id_mu_);
    static const char* hex = "0123456789abcdef";
    std::string id;
    do {
      auto bits = rng_();
      id.clear();
      for (int i = 0; i < 16; ++i, bits >>= 4) id.push_back(hex[bits & 0xF]);
    } while (exists(id));
    return id;
  }

  bool exists(const std::string& id) const {
    std::shared_lock lock(mu_);
    return sessions_.count(id) != 0;
  }

  PipelineConfig cfg_;
  std::filesystem::path data_dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mu_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace ratewise
