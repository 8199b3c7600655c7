#include <doctest.h>

#include <filesystem>

#include "mildmix/errors.hpp"
#include "mildmix/experiment.hpp"
#include "mildmix/report.hpp"
#include "test_util.hpp"

using namespace mildmix;
using mildmix::testing::kind_of;
using nlohmann::json;

TEST_CASE("floats print with 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
  CsvTable t({"a", "b"});
  t.row().cell(1).cell(0.5);
  CHECK(t.str() == "a,b\n1,0.5\n");
}

TEST_CASE("config round-trips") {
  json j = {{"rotation", {{"alpha", "sqrt2m1"}, {"depth", 30}}},
            {"roof", RoofFunction::constant_roof(2.0).to_json()},
            {"seed", 99},
            {"params", {{"epsilon", 0.05}}}};
  auto cfg = ExperimentConfig::from_json(j);
  auto back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.seed == 99);
  CHECK(back.depth == 30);
  CHECK(back.roof_function().constant() == 2.0);
}

TEST_CASE("config validation") {
  CHECK(kind_of([] { ExperimentConfig::from_json(json::array()); }) == ErrorKind::schema_violation);
  CHECK(kind_of([] { ExperimentConfig::from_json({{"colour", 1}}); }) == ErrorKind::schema_violation);
  CHECK(kind_of([] { ExperimentConfig::from_json({{"seed", -1}}); }) == ErrorKind::schema_violation);
  CHECK(kind_of([] { ExperimentConfig::from_json({{"roof", {{"jumps", {1.0}}}}}); }) ==
        ErrorKind::schema_violation);
  CHECK(kind_of([] { ExperimentConfig::from_json({{"roof", "no/such/file.json"}}); }) ==
        ErrorKind::file_io);

  ExperimentConfig cfg;
  cfg.params = {{"pairz", 3}};
  CHECK(kind_of([&] { run_command("ratner-scan", cfg); }) == ErrorKind::schema_violation);
  cfg.params = {{"pairs", 2.5}};
  CHECK(kind_of([&] { run_command("ratner-scan", cfg); }) == ErrorKind::schema_violation);
  cfg.params = json::object();
  CHECK(kind_of([&] { run_command("nonsense", cfg); }) == ErrorKind::schema_violation);
}

TEST_CASE("roof file resolves relative to the config") {
  const std::filesystem::path data = MILDMIX_TEST_DATA;
  auto cfg = ExperimentConfig::from_json(json::parse(read_text_file(data / "control.json")), data);
  auto res = run_command("rigidity-scan", cfg);
  const auto& prof = res.report.at("profile");
  CHECK(prof.at("times") == 11);
  CHECK(prof.at("sup") == 1.0);
  CHECK(prof.at("bound").is_null());
  CHECK(res.tables.front().name == "profile.csv");
}

TEST_CASE("reports do not depend on the worker count") {
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.params = {{"pairs", 40}};
  auto a = run_command("ratner-scan", cfg, 1);
  auto b = run_command("ratner-scan", cfg, 3);
  CHECK(dump_json(a.report) == dump_json(b.report));
  CHECK(a.tables.front().content == b.tables.front().content);
  CHECK(a.report.contains("success_rate"));

  cfg.params = {{"samples", 200}, {"n_max", 500}};
  auto c = run_command("trow-check", cfg, 1);
  auto d = run_command("trow-check", cfg, 2);
  CHECK(dump_json(c.report) == dump_json(d.report));
  CHECK(c.passed);
  cfg.seed = 6;
  CHECK(dump_json(run_command("trow-check", cfg, 1).report) != dump_json(c.report));
}

TEST_CASE("every command runs on defaults") {
  for (const auto& name : command_names()) {
    INFO(name);
    ExperimentConfig cfg;
    if (name == "ratner-scan") cfg.params = {{"pairs", 10}};
    if (name == "trow-check") cfg.params = {{"samples", 50}};
    if (name == "rigidity-scan") cfg.params = {{"t_max", 30.0}, {"grid", 1000}};
    auto res = run_command(name, cfg);
    CHECK(res.report.at("command") == name);
    CHECK_FALSE(res.tables.empty());
  }
}

TEST_CASE("selftest passes and can be forced to fail") {
  for (const auto& c : run_selftest()) {
    INFO(c.name);
    CHECK(c.passed);
  }
  bool any_failed = false;
  for (const auto& c : run_selftest(0.0)) any_failed = any_failed || !c.passed;
  CHECK(any_failed);
}
