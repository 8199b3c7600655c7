#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "mildmix/errors.hpp"
#include "mildmix/experiment.hpp"
#include "mildmix/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mildmix;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitSelftest = 4;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
  unsigned threads = 0;
};

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::schema_violation || kind == ErrorKind::file_io ? kExitConfig
                                                                           : kExitDomain;
}

void emit_error(const GlobalOptions& g, const std::string& command, ErrorKind kind,
                const std::string& message) {
  const json rec = {{"error", std::string(to_string(kind))},
                    {"message", message},
                    {"command", command}};
  std::cerr << rec.dump() << "\n";
  if (!g.out.empty()) {
    try {
      write_text_file(fs::path(g.out) / "error.json", dump_json(rec));
    } catch (const Error&) {
    }
  }
}

ExperimentConfig load_config(const GlobalOptions& g) {
  ExperimentConfig cfg;
  if (!g.config.empty()) {
    const fs::path path(g.config);
    json j;
    try {
      j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::schema_violation, "config " + path.string() + ": " + e.what());
    }
    cfg = ExperimentConfig::from_json(j, path.parent_path());
  }
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

void publish(const GlobalOptions& g, const CommandResult& res) {
  const std::string report = dump_json(res.report);
  if (!g.out.empty()) {
    const fs::path dir(g.out);
    write_text_file(dir / "report.json", report);
    for (const auto& t : res.tables) write_text_file(dir / t.name, t.content);
  }
  if (g.format == "csv" && !res.tables.empty()) {
    std::cout << res.tables.front().content;
  } else {
    std::cout << report;
  }
}

int run_selftest_command(const GlobalOptions& g, double scale) {
  const auto checks = run_selftest(scale, g.seed.value_or(1));
  bool all = true;
  json rows = json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << format_double(c.value)
              << " tol=" << format_double(c.tolerance) << "\n";
    rows.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"tolerance", c.tolerance}});
  }
  if (!g.out.empty())
    write_text_file(fs::path(g.out) / "selftest.json", dump_json({{"checks", rows}, {"passed", all}}));
  return all ? 0 : kExitSelftest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Special flows over irrational rotations: scans and checks"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Seed; overrides the config");
  app.add_option("--out", g.out, "Directory for report files");
  app.add_option("--format", g.format, "Format printed to stdout")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", g.threads, "Worker count (0 = all cores)");

  const std::map<std::string, std::string> blurbs = {
      {"cf", "Continued fraction, convergents and their inequalities"},
      {"birkhoff", "Birkhoff sums, direct and fast"},
      {"trow-check", "Pair-difference formula against direct sums"},
      {"ratner-scan", "Divergence witnesses for random nearby pairs"},
      {"rigidity-scan", "Near-return measure profile over times"},
      {"flow-orbit", "Sampled orbit of the special flow"},
      {"section-return", "Return times to a circle around the singular point"},
  };
  for (const auto& name : command_names()) app.add_subcommand(name, blurbs.at(name));
  double scale = 1.0;
  auto* selftest = app.add_subcommand("selftest", "Fast consistency checks on built-in inputs");
  selftest->add_option("--tolerance-scale", scale, "Multiply every tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "schema_violation"}, {"message", e.what()}}.dump() << "\n";
    return kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "selftest") return run_selftest_command(g, scale);
    const ExperimentConfig cfg = load_config(g);
    publish(g, run_command(command, cfg, g.threads));
    return 0;
  } catch (const Error& e) {
    emit_error(g, command, e.kind(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    emit_error(g, command, ErrorKind::out_of_range, e.what());
    return kExitDomain;
  }
}
