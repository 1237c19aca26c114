#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "ratewise/core_data.hpp"
#include "ratewise/error.hpp"
#include "ratewise/session.hpp"

namespace ratewise {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir;  // empty: in-memory only
  PipelineConfig pipeline;
};

// key = value lines; '#' starts a comment. Recognized keys:
//   host, port, data_dir,
//   trainer.c, trainer.tol, trainer.max_iter, trainer.seed,
//   projection.perplexity, projection.iterations, projection.seed
inline ServiceConfig parse_config(std::istream& in) {
  ServiceConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) fail(ErrorKind::validation, "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(trimmed.substr(0, eq));
    const std::string value = detail::trim(trimmed.substr(eq + 1));
    auto number = [&] {
      auto v = parse_double(value);
      if (!v) fail(ErrorKind::validation, "config line " + std::to_string(line_no) + ": '" + key + "' needs a number");
      return *v;
    };
    auto integer = [&] {
      const double v = number();
      if (v != static_cast<double>(static_cast<long long>(v)) || v < 0) {
        fail(ErrorKind::validation, "config line " + std::to_string(line_no) + ": '" + key + "' needs a non-negative integer");
      }
      return static_cast<long long>(v);
    };
    if (key == "host") cfg.host = value;
    else if (key == "port") cfg.port = static_cast<int>(integer());
    else if (key == "data_dir") cfg.data_dir = value;
    else if (key == "trainer.c") cfg.pipeline.trainer.c = number();
    else if (key == "trainer.tol") cfg.pipeline.trainer.tol = number();
    else if (key == "trainer.max_iter") cfg.pipeline.trainer.max_iter = static_cast<int>(integer());
    else if (key == "trainer.seed") cfg.pipeline.trainer.seed = static_cast<std::uint64_t>(integer());
    else if (key == "projection.perplexity") cfg.pipeline.projection.perplexity = number();
    else if (key == "projection.iterations") cfg.pipeline.projection.iterations = static_cast<int>(integer());
    else if (key == "projection.seed") cfg.pipeline.projection.seed = static_cast<std::uint64_t>(integer());
    else fail(ErrorKind::validation, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.pipeline.trainer.validate();
  return cfg;
}

inline ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::validation, "cannot read config file " + path.string());
  return parse_config(in);
}

}  // namespace ratewise
