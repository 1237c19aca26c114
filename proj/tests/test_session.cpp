#include <catch_amalgamated.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "fixtures.hpp"
#include "ratewise/config.hpp"
#include "ratewise/session.hpp"

using namespace ratewise;
using Catch::Matchers::ContainsSubstring;

namespace {

Dataset banks() {
  std::ifstream in(RATEWISE_SAMPLES_DIR "/banks.csv");
  return ingest(in);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::internal;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ratewise-test-" + std::to_string(std::random_device{}()) + "-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

constexpr const char* kBrcb = "Beijing Rural Commercial Bank";

}  // namespace

TEST_CASE("new session starts from the default scheme", "[session]") {
  Session s("s1", banks());
  const auto schemes = s.schemes();
  REQUIRE(schemes.size() == 1);
  CHECK(schemes[0].id == "default");
  CHECK(schemes[0].kind == SchemeKind::default_);
  const auto r = s.ranking();
  CHECK(r.entries.size() == 30);
  CHECK(r.scheme_id == "default");
  CHECK_FALSE(s.pending_preview());
  // the sample script's drags start from these positions
  for (const auto& e : r.entries) {
    if (e.id == "Beijing Rural Commercial Bank") CHECK(e.rank == 5u);
    if (e.id == "Bank of Communications") CHECK(e.rank == 8u);
  }
  CHECK(kind_of([&] { s.comparison(); }) == ErrorKind::conflict);
  CHECK(kind_of([&] { s.ranking("nope"); }) == ErrorKind::not_found);
}

TEST_CASE("a drag yields three candidate schemes", "[session]") {
  Session s("s1", banks());
  const auto base = s.ranking().ranking();
  const auto from = static_cast<std::size_t>(std::find(base.begin(), base.end(), kBrcb) - base.begin()) + 1;
  const auto preview = s.submit_drag(kBrcb, 13);
  CHECK(preview.drag.from_rank == from);
  CHECK(preview.drag.to_rank == 13);
  CHECK(preview.base_scheme_id == "default");
  for (auto kind : {SchemeKind::local, SchemeKind::global, SchemeKind::type}) {
    const auto& c = preview.candidate(kind);
    INFO(to_string(kind) << ": " << c.error);
    REQUIRE(c.ok());
    CHECK(c.result->entries.size() == 30);
    for (const auto& e : c.result->entries) {
      double sum = 0.0;
      for (double x : e.contributions) sum += x;
      CHECK(std::abs(e.score - sum) <= 1e-9);
    }
  }
  CHECK(preview.candidate(SchemeKind::type).scheme->type_weights.size() == 4);
  CHECK(s.schemes().size() == 1);  // nothing saved yet
  CHECK(s.audit_log().size() == 1);
}

TEST_CASE("drag validation errors", "[session]") {
  Session s("s1", banks());
  CHECK(kind_of([&] { s.submit_drag("Nobody Bank", 3); }) == ErrorKind::not_found);
  CHECK(kind_of([&] { s.submit_drag(kBrcb, 31); }) == ErrorKind::validation);
  CHECK(kind_of([&] { s.submit_drag(kBrcb, 3, std::size_t{99}); }) == ErrorKind::validation);
  CHECK(kind_of([&] { s.submit_drag(kBrcb, 3, {}, "scheme-9"); }) == ErrorKind::not_found);
  CHECK(s.audit_log().empty());
}

TEST_CASE("a drag to the current position is accepted", "[session]") {
  Session s("s1", banks());
  const auto base = s.ranking().ranking();
  const auto preview = s.submit_drag(base[6], 7, std::size_t{7});
  CHECK(preview.candidate(SchemeKind::local).ok());
  CHECK(preview.candidate(SchemeKind::local).constraints->pairs.size() == 30);
}

TEST_CASE("saving consumes the preview", "[session]") {
  Session s("s1", banks());
  CHECK(kind_of([&] { s.save_scheme(SchemeKind::type); }) == ErrorKind::conflict);
  s.submit_drag(kBrcb, 13);
  s.submit_drag(kBrcb, 12);  // replaces the first preview
  CHECK(s.pending_preview()->drag.to_rank == 12);
  const auto saved = s.save_scheme(SchemeKind::type);
  CHECK(saved.id == "scheme-1");
  CHECK(saved.label == "Scheme 1 (type)");
  CHECK(saved.created_from->to_rank == 12);
  CHECK(s.schemes().size() == 2);
  CHECK(kind_of([&] { s.save_scheme(SchemeKind::type); }) == ErrorKind::conflict);
  CHECK(s.ranking().scheme_id == "scheme-1");

  s.submit_drag(kBrcb, 20);
  CHECK(s.pending_preview()->base_scheme_id == "scheme-1");
  const auto named = s.save_scheme(SchemeKind::local, "my local");
  CHECK(named.label == "my local");
  CHECK(named.id == "scheme-2");
}

TEST_CASE("comparison bundle", "[session]") {
  Session s("s1", banks());
  s.submit_drag(kBrcb, 13);
  s.save_scheme(SchemeKind::local);
  s.submit_drag("Bank of Communications", 5);
  s.save_scheme(SchemeKind::global);
  s.submit_drag("Bank of Communications", 5, {}, "default");
  s.save_scheme(SchemeKind::type);
  const auto c = s.comparison();
  REQUIRE(c["axes"].size() == 4);
  CHECK(c["entities"].size() == 30);
  CHECK(c["rankDeltas"].size() == 3);
  for (const auto& axis : c["axes"]) CHECK(axis["ranks"].size() == 30);
  CHECK(c["axes"][0]["samples"].is_null());
  CHECK(c["weightsCurve"][3]["weights"].size() == 4);  // one vector per type

  const auto& ids = c["entities"];
  for (std::size_t a = 0; a < 3; ++a) {
    const auto& d = c["rankDeltas"][a];
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const long long expect = c["axes"][a]["ranks"][i].get<long long>() - c["axes"][a + 1]["ranks"][i].get<long long>();
      CHECK(d["rankDelta"][i].get<long long>() == expect);
      CHECK(d["direction"][i] == (expect > 0 ? "up" : expect < 0 ? "down" : "neutral"));
    }
  }
  // top-level samples describe the latest saved scheme
  CHECK(c["draggedEntity"] == "Bank of Communications");
  CHECK(c["sampleRoles"].size() == 30);
  CHECK(c["boxStats"].size() == 6);
  CHECK(c["sampleRoles"] == c["axes"][3]["samples"]["sampleRoles"]);
}

TEST_CASE("box statistics", "[session]") {
  const auto one = box_stats({0.4});
  CHECK(one.min == 0.4);
  CHECK(one.q1 == 0.4);
  CHECK(one.median == 0.4);
  CHECK(one.q3 == 0.4);
  CHECK(one.max == 0.4);
  const auto five = box_stats({5, 1, 4, 2, 3});
  CHECK(five.min == 1);
  CHECK(five.q1 == 2);
  CHECK(five.median == 3);
  CHECK(five.q3 == 4);
  CHECK(five.max == 5);
  const auto four = box_stats({1, 2, 3, 4});
  CHECK(four.q1 == Catch::Approx(1.75));
  CHECK(four.median == Catch::Approx(2.5));
}

TEST_CASE("projection cache matches recomputation", "[session]") {
  Session s("s1", banks());
  const auto cached = s.projection("default");
  CHECK(cached == s.compute_projection(s.schemes()[0]));
  CHECK(cached == s.projection("default"));
  CHECK(cached.params.perplexity == 9.0);  // 30 entities cannot take 10
  CHECK(kind_of([&] { s.projection("missing"); }) == ErrorKind::not_found);
}

TEST_CASE("replaying the audit log reproduces the session bit for bit", "[session]") {
  Session s("s1", banks());
  s.submit_drag(kBrcb, 13);
  s.save_scheme(SchemeKind::local);
  s.submit_drag("Bank of Communications", 5);
  s.save_scheme(SchemeKind::type, "Type weights");
  s.submit_drag("Guangzhou Bank", 2);  // pending preview at the end

  // through the persisted JSON form, as the store does
  std::vector<AuditEntry> log;
  for (const auto& e : s.audit_log()) log.push_back(audit_from_json(Json::parse(to_json(e).dump())));
  const auto again = Session::replay("s2", banks(), log);
  REQUIRE(again->schemes().size() == s.schemes().size());
  for (const auto& scheme : s.schemes()) {
    const auto other = again->schemes();
    const auto it = std::find_if(other.begin(), other.end(), [&](const auto& o) { return o.id == scheme.id; });
    REQUIRE(it != other.end());
    CHECK(*it == scheme);
    CHECK(again->ranking(scheme.id) == s.ranking(scheme.id));
    CHECK(again->projection(scheme.id) == s.projection(scheme.id));
  }
  REQUIRE(again->pending_preview());
  CHECK(again->pending_preview()->drag == s.pending_preview()->drag);
}

TEST_CASE("store persists and restores sessions", "[session]") {
  TempDir dir;
  std::string id;
  RankingResult saved_ranking;
  {
    SessionStore store({}, dir.path);
    auto s = store.create(banks());
    id = s->id();
    CHECK(id.size() == 16);
    s->submit_drag(kBrcb, 13);
    s->save_scheme(SchemeKind::global);
    saved_ranking = s->ranking("scheme-1");
    CHECK(store.create(banks())->id() != id);  // same data, new session
    CHECK(kind_of([&] { store.get("missing"); }) == ErrorKind::not_found);
  }
  SessionStore restored({}, dir.path);
  const auto failures = restored.load_all();
  CHECK(failures.empty());
  CHECK(restored.size() == 2);
  auto s = restored.get(id);
  CHECK(s->ranking("scheme-1") == saved_ranking);

  // new activity appends to the same log
  s->submit_drag(kBrcb, 3);
  s->save_scheme(SchemeKind::local);
  SessionStore third({}, dir.path);
  third.load_all();
  CHECK(third.get(id)->schemes().size() == 3);

  // a corrupt log is reported, not fatal
  std::filesystem::create_directories(dir.path / "broken");
  std::ofstream(dir.path / "broken" / "dataset.csv") << "name,type,a,b\nx,T,1,2\ny,T,3,4\n";
  std::ofstream(dir.path / "broken" / "audit.jsonl") << "{not json\n";
  SessionStore fourth({}, dir.path);
  const auto f = fourth.load_all();
  CHECK(f.count("broken") == 1);
  CHECK(fourth.size() == 2);
}

TEST_CASE("concurrent readers and writers", "[session]") {
  Session s("s1", banks());
  std::vector<std::thread> threads;
  std::atomic<int> errors{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (int i = 0; i < 3; ++i) {
          if (t % 2) {
            s.ranking();
            s.summary();
          } else {
            s.submit_drag(kBrcb, static_cast<std::size_t>(5 + i + t));
          }
        }
      } catch (...) {
        ++errors;
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(errors == 0);
  CHECK(s.audit_log().size() == 6);
}

TEST_CASE("service config", "[session]") {
  std::istringstream in(
      "# service\n"
      "host = 0.0.0.0\n"
      "port = 9000   # trailing comment\n"
      "data_dir = /tmp/x\n"
      "trainer.c = 5\n"
      "projection.perplexity = 7.5\n");
  const auto cfg = parse_config(in);
  CHECK(cfg.host == "0.0.0.0");
  CHECK(cfg.port == 9000);
  CHECK(cfg.data_dir == "/tmp/x");
  CHECK(cfg.pipeline.trainer.c == 5.0);
  CHECK(cfg.pipeline.projection.perplexity == 7.5);

  std::istringstream unknown("colour = blue\n");
  CHECK_THROWS_WITH(parse_config(unknown), ContainsSubstring("unknown key"));
  std::istringstream bad("port = eighty\n");
  CHECK_THROWS_AS(parse_config(bad), Error);
  std::istringstream bad_c("trainer.c = -1\n");
  CHECK_THROWS_AS(parse_config(bad_c), Error);
  CHECK_NOTHROW(load_config(RATEWISE_SAMPLES_DIR "/service.conf"));
}

TEST_CASE("projection perplexity is capped for small sessions", "[session]") {
  ProjectionParams p;
  CHECK(fit_projection_params(p, 30).perplexity == 9.0);
  CHECK(fit_projection_params(p, 31).perplexity == 10.0);
  CHECK(fit_projection_params(p, 100).perplexity == 10.0);
  CHECK(fit_projection_params(p, 4).perplexity == 1.0);
}
