#pragma once

#include <string>

// Eigen (via session.hpp) must come before httplib: <resolv.h> defines a
// _res macro that collides with Eigen parameter names.
#include "ratewise/json_io.hpp"
#include "ratewise/session.hpp"

#include "httplib.h"

namespace ratewise {

inline int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::internal: return 500;
  }
  return 500;
}

inline Json preview_json(const Preview& p, const Dataset& ds) {
  Json candidates = Json::object();
  for (const auto& c : p.candidates) {
    if (!c.ok()) {
      candidates[std::string(to_string(c.kind))] = Json{{"error", c.error}, {"warnings", c.warnings}};
      continue;
    }
    Json training = Json::object();
    for (const auto& [label, wv] : c.training) training[label.empty() ? "all" : label] = to_json(wv);
    candidates[std::string(to_string(c.kind))] = Json{{"scheme", to_json(*c.scheme)},
                                                      {"ranking", to_json(*c.result, ds)},
                                                      {"constraints", to_json(*c.constraints)},
                                                      {"training", std::move(training)},
                                                      {"warnings", c.warnings}};
  }
  return Json{{"dragId", p.drag_seq}, {"baseScheme", p.base_scheme_id}, {"drag", to_json(p.drag)},
              {"candidates", std::move(candidates)}};
}

// Projection points decorated for the scatter views: rating of the same
// scheme (colour) and one raw indicator (circle size, first by default).
inline Json projection_json(Session& session, const std::string& scheme_id, const std::string& size_indicator = {}) {
  const auto proj = session.projection(scheme_id);
  const auto ranking = session.ranking(scheme_id);
  const auto& ds = session.dataset();
  std::size_t size_col = 0;
  if (!size_indicator.empty()) {
    const auto& inds = ds.schema().indicators;
    auto it = std::find_if(inds.begin(), inds.end(), [&](const Indicator& i) { return i.name == size_indicator; });
    if (it == inds.end()) fail(ErrorKind::validation, "unknown indicator '" + size_indicator + "'");
    size_col = static_cast<std::size_t>(it - inds.begin());
  }
  Json j = to_json(proj);
  j["sizeIndicator"] = ds.schema().indicators[size_col].name;
  for (auto& pt : j["points"]) {
    const auto id = pt["id"].get<std::string>();
    const auto& e = ds.entity(id);
    pt["type"] = e.type_label;
    pt["rating"] = ranking.find(id)->rating;
    pt["size"] = e.raw[size_col];
  }
  return j;
}

namespace detail {

inline void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Handler>
auto guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_json(res, Json{{"error", to_string(e.kind())}, {"message", e.what()}}, http_status(e.kind()));
    } catch (const Json::exception& e) {
      send_json(res, Json{{"error", "validation"}, {"message", std::string("malformed JSON: ") + e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, Json{{"error", "internal"}, {"message", e.what()}}, 500);
    }
  };
}

inline Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  auto body = Json::parse(req.body);
  if (!body.is_object()) fail(ErrorKind::validation, "request body must be a JSON object");
  return body;
}

}  // namespace detail

// Registers the JSON API on `server`:
//   POST /sessions                        dataset upload (raw CSV or multipart "file")
//   GET  /sessions/:id                    summary and saved schemes
//   GET  /sessions/:id/rankings?scheme=   ranking of one scheme (latest by default)
//   POST /sessions/:id/drags              {entityId, toRank, fromRank?, baseScheme?}
//   POST /sessions/:id/schemes            {which, label?}
//   GET  /sessions/:id/comparison
//   GET  /sessions/:id/projection?scheme=&size=
inline void mount_api(httplib::Server& server, SessionStore& store) {
  using detail::guarded;
  using detail::send_json;

  server.Post("/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    std::string text = req.body;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("file")) fail(ErrorKind::validation, "multipart upload needs a 'file' part");
      text = req.get_file_value("file").content;
    }
    auto session = store.create(ingest_text(text));
    Json body = session->summary();
    body["ranking"] = to_json(session->ranking("default"), session->dataset());
    send_json(res, body, 201);
  }));

  server.Get("/sessions/:id", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    send_json(res, store.get(req.path_params.at("id"))->summary());
  }));

  server.Get("/sessions/:id/rankings", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto session = store.get(req.path_params.at("id"));
    send_json(res, to_json(session->ranking(req.get_param_value("scheme")), session->dataset()));
  }));

  server.Post("/sessions/:id/drags", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto session = store.get(req.path_params.at("id"));
    const auto body = detail::parse_body(req);
    if (!body.contains("entityId") || !body.contains("toRank")) {
      fail(ErrorKind::validation, "drag needs entityId and toRank");
    }
    const auto to_rank = body.at("toRank").get<long long>();
    if (to_rank < 1) fail(ErrorKind::validation, "toRank must be at least 1");
    std::optional<std::size_t> from_rank;
    if (body.contains("fromRank") && !body["fromRank"].is_null()) from_rank = body["fromRank"].get<std::size_t>();
    const auto preview = session->submit_drag(body.at("entityId").get<std::string>(),
                                              static_cast<std::size_t>(to_rank), from_rank,
                                              body.value("baseScheme", std::string{}));
    send_json(res, preview_json(preview, session->dataset()));
  }));

  server.Post("/sessions/:id/schemes", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto session = store.get(req.path_params.at("id"));
    const auto body = detail::parse_body(req);
    if (!body.contains("which")) fail(ErrorKind::validation, "save needs 'which' (local, global or type)");
    const auto scheme = session->save_scheme(scheme_kind_from_string(body.at("which").get<std::string>()),
                                             body.value("label", std::string{}));
    send_json(res, Json{{"scheme", to_json(scheme)}, {"ranking", to_json(session->ranking(scheme.id), session->dataset())}},
              201);
  }));

  server.Get("/sessions/:id/comparison", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    send_json(res, store.get(req.path_params.at("id"))->comparison());
  }));

  server.Get("/sessions/:id/projection", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto session = store.get(req.path_params.at("id"));
    std::string scheme = req.get_param_value("scheme");
    if (scheme.empty()) scheme = "default";
    send_json(res, projection_json(*session, scheme, req.get_param_value("size")));
  }));
}

}  // namespace ratewise
