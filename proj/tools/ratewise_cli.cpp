// Headless driver: serve the HTTP API, run interaction scripts, check datasets.
//
// Exit codes: 0 success, 1 validation error, 2 internal error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ratewise.hpp"
#include "ratewise/http_api.hpp"

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int exit_code(const ratewise::Error& e) { return e.kind() == ratewise::ErrorKind::internal ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ratewise: interactive multi-attribute rating workbench"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<double> c;
  std::optional<double> perplexity;
  app.add_option("--seed", seed, "Seed for training order and projection jitter");
  app.add_option("--c", c, "Soft-margin penalty C");
  app.add_option("--perplexity", perplexity, "Projection perplexity");

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON API");
  serve->add_option("--config", config_path, "key=value config file");

  std::string script_path;
  auto* run = app.add_subcommand("run", "Execute an interaction script and write reports");
  run->add_option("--script", script_path, "Script JSON file")->required();

  std::string check_path;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a dataset file");
  ingest_cmd->add_option("--check", check_path, "Delimited text dataset")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ratewise::ServiceConfig cfg;
    if (!config_path.empty()) cfg = ratewise::load_config(config_path);
    if (seed) {
      cfg.pipeline.trainer.seed = *seed;
      cfg.pipeline.projection.seed = *seed;
    }
    if (c) cfg.pipeline.trainer.c = *c;
    if (perplexity) cfg.pipeline.projection.perplexity = *perplexity;
    cfg.pipeline.trainer.validate();

    if (*ingest_cmd) {
      std::ifstream in(check_path);
      if (!in) throw ratewise::Error(ratewise::ErrorKind::validation, "cannot read " + check_path);
      const auto ds = ratewise::ingest(in);
      std::cout << "ok: " << ds.size() << " entities, " << ds.indicator_count() << " indicators, "
                << ds.type_labels().size() << " types\n";
      return 0;
    }

    if (*run) {
      const auto script = ratewise::load_script(script_path);
      const auto report = ratewise::run_script(script, cfg.pipeline);
      for (const auto& f : report.files) std::cout << f.string() << '\n';
      return 0;
    }

    ratewise::SessionStore store(cfg.pipeline, cfg.data_dir);
    for (const auto& [id, why] : store.load_all()) std::cerr << "session " << id << " not restored: " << why << '\n';
    httplib::Server server;
    ratewise::mount_api(server, store);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << cfg.host << ':' << cfg.port << " (" << store.size() << " sessions restored)\n";
    if (!server.listen(cfg.host, cfg.port)) {
      std::cerr << "error: cannot listen on " << cfg.host << ':' << cfg.port << '\n';
      return 2;
    }
    return 0;
  } catch (const ratewise::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}
