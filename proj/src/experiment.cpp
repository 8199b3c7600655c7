#include "mildmix/experiment.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "mildmix/cocycle.hpp"
#include "mildmix/errors.hpp"
#include "mildmix/flow.hpp"
#include "mildmix/numeric.hpp"
#include "mildmix/parallel.hpp"
#include "mildmix/poincare.hpp"
#include "mildmix/ratner.hpp"
#include "mildmix/report.hpp"
#include "mildmix/rigidity.hpp"

namespace mildmix {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& what) {
  throw Error(ErrorKind::schema_violation, what);
}

const json& defaults_table() {
  static const json table = {
      {"cf", json::object()},
      {"birkhoff",
       {{"x", 0.3}, {"n", {1, 10, 100, 1000, 10000, 100000}}, {"naive_limit", 10000000}}},
      {"trow-check", {{"samples", 10000}, {"n_max", 10000}, {"tolerance", 1e-9}}},
      {"ratner-scan",
       {{"epsilon", 0.1}, {"N", 10}, {"gamma", 1.0}, {"pairs", 1000}, {"flow", true}}},
      {"rigidity-scan",
       {{"epsilon", 1e-3},
        {"grid", 10000},
        {"t_min", 10.0},
        {"t_max", 1000.0},
        {"t_step", 1.0},
        {"times", json::array()},
        {"threshold", 0.15},
        {"include_zero", false}}},
      {"flow-orbit", {{"x", 0.3}, {"s", 0.0}, {"dt", 0.1}, {"count", 1000}}},
      {"section-return",
       {{"system", "normalized"},
        {"r", 0.1},
        {"thetas", 100},
        {"tol", 1e-10},
        {"separatrix", true},
        {"trajectory", nullptr}}},
  };
  return table;
}

bool same_type(const json& def, const json& v) {
  if (def.is_null()) return v.is_null() || v.is_object();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  return v.is_object();
}

json merged_params(std::string_view command, const json& given) {
  json p = command_defaults(command);
  if (given.is_null()) return p;
  if (!given.is_object()) schema("params must be an object");
  for (const auto& [key, value] : given.items()) {
    if (!p.contains(key)) schema("unknown parameter '" + key + "' for " + std::string(command));
    if (!same_type(p[key], value))
      schema("parameter '" + key + "' has the wrong type for " + std::string(command));
    p[key] = value;
  }
  return p;
}

double number_at(const json& p, const char* key) { return p.at(key).get<double>(); }
std::int64_t int_at(const json& p, const char* key) { return p.at(key).get<std::int64_t>(); }

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::out_of_range, what);
}

json base_report(std::string_view command, const ExperimentConfig& cfg, const json& params) {
  json cj = cfg.to_json();
  cj["params"] = params;
  return {{"command", std::string(command)}, {"config", cj}};
}

// Per-sample generator independent of the worker count.
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t i) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(i + 1)));
}

CommandResult cmd_cf(const ExperimentConfig& cfg, const json& params) {
  const Rotation rot = cfg.rotation();
  CommandResult out;
  out.report = base_report("cf", cfg, params);
  out.report["rotation"] = rot.to_json();
  out.report["C"] = bounded_type_constant(rot);
  CsvTable t({"n", "a_n", "p_n", "q_n", "lower_holds", "upper_holds"});
  const auto bounds = check_convergent_bounds(rot);
  bool all = true;
  for (int n = 0; n <= rot.depth(); ++n) {
    t.row().cell(n).cell(n == 0 ? std::int64_t{0} : rot.partial_quotients()[n - 1]);
    t.cell(rot.numerators()[n].str()).cell(rot.denominators()[n].str());
    if (n < static_cast<int>(bounds.size())) {
      const auto& b = bounds[n];
      t.cell(std::string(b.lower_holds ? "1" : "0")).cell(std::string(b.upper_holds ? "1" : "0"));
      all = all && b.lower_holds && b.upper_holds && b.recurrence_holds && b.coprime;
    } else {
      t.cell(std::string()).cell(std::string());
    }
  }
  out.report["convergent_bounds_hold"] = all;
  out.passed = all;
  out.tables.push_back({"convergents.csv", t.str()});
  return out;
}

CommandResult cmd_birkhoff(const ExperimentConfig& cfg, const json& params) {
  const Rotation rot = cfg.rotation();
  const RoofFunction f = cfg.roof_function();
  const double x = number_at(params, "x");
  const std::int64_t naive_limit = int_at(params, "naive_limit");
  const CirclePoint px = CirclePoint::from_double(x);
  CsvTable t({"n", "x", "naive", "fast", "abs_diff"});
  double worst = 0.0;
  for (const auto& nj : params.at("n")) {
    if (!nj.is_number_integer()) schema("n must be a list of integers");
    const std::int64_t n = nj.get<std::int64_t>();
    const bool fast_ok = std::abs(n) <= kFastWindow;
    const bool naive_ok = std::abs(n) <= naive_limit;
    require(fast_ok || naive_ok, "n outside both evaluation windows");
    const double naive = naive_ok ? birkhoff_naive(rot, f, n, px) : std::nan("");
    const double fast = fast_ok ? birkhoff_fast(rot, f, n, px) : std::nan("");
    const double diff = naive_ok && fast_ok ? std::abs(naive - fast) : std::nan("");
    if (naive_ok && fast_ok) worst = std::max(worst, diff);
    t.row().cell(n).cell(x).cell(naive).cell(fast).cell(diff);
  }
  CommandResult out;
  out.report = base_report("birkhoff", cfg, params);
  out.report["rows"] = t.size();
  out.report["max_abs_diff"] = worst;
  out.tables.push_back({"birkhoff.csv", t.str()});
  return out;
}

CommandResult cmd_trow(const ExperimentConfig& cfg, const json& params, unsigned threads) {
  const Rotation rot = cfg.rotation();
  const RoofFunction f = cfg.roof_function();
  const RoofFunction fpl = f.decompose().first;
  const std::int64_t samples = int_at(params, "samples");
  const std::int64_t n_max = int_at(params, "n_max");
  const double tol = number_at(params, "tolerance");
  require(samples >= 1 && n_max >= 1, "samples and n_max must be positive");

  struct Row {
    std::int64_t n;
    double x, y, fast, naive;
  };
  std::vector<Row> rows(static_cast<std::size_t>(samples));
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    auto rng = sample_rng(cfg.seed, i);
    std::uniform_int_distribution<std::int64_t> nd(1, n_max);
    Row r{};
    r.n = nd(rng);
    CirclePoint x, y;
    do {
      x = CirclePoint::from_double(uniform01(rng));
      y = CirclePoint::from_double(uniform01(rng));
    } while (x == y);
    r.x = x.to_double();
    r.y = y.to_double();
    r.fast = pl_difference(rot, f, r.n, x, y);
    r.naive = birkhoff_naive(rot, fpl, r.n, y) - birkhoff_naive(rot, fpl, r.n, x);
    rows[i] = r;
  });
  CsvTable t({"n", "x", "y", "pl_difference", "naive", "abs_err"});
  double worst = 0.0;
  for (const auto& r : rows) {
    const double err = std::abs(r.fast - r.naive);
    worst = std::max(worst, err);
    t.row().cell(r.n).cell(r.x).cell(r.y).cell(r.fast).cell(r.naive).cell(err);
  }
  const double worked = pl_difference(rot, f, 3, CirclePoint::from_double(0.3),
                                      CirclePoint::from_double(0.4));
  CommandResult out;
  out.report = base_report("trow-check", cfg, params);
  out.report["samples"] = samples;
  out.report["max_abs_error"] = worst;
  out.report["worked_case"] = {{"n", 3}, {"x", 0.3}, {"y", 0.4}, {"value", worked}};
  out.passed = worst < tol;
  out.report["passed"] = out.passed;
  out.tables.push_back({"trow.csv", t.str()});
  return out;
}

CommandResult cmd_ratner(const ExperimentConfig& cfg, const json& params, unsigned threads) {
  const RatnerConfig rc = build_config(cfg.rotation(), cfg.roof_function(),
                                       number_at(params, "epsilon"), int_at(params, "N"),
                                       number_at(params, "gamma"));
  ScanOptions opts;
  opts.pairs = int_at(params, "pairs");
  opts.seed = cfg.seed;
  opts.flow = params.at("flow").get<bool>();
  opts.threads = threads;
  const ScanReport scan = ratner_scan(rc, opts);
  CommandResult out;
  out.report = base_report("ratner-scan", cfg, params);
  out.report["scan"] = scan.to_json(rc);
  out.report["success_rate"] = scan.success_rate;
  CsvTable t({"index", "x", "y", "distance", "s", "j_lo", "j_hi", "ratio", "d", "shift",
              "base_success", "hit_fraction", "flow_success", "success"});
  for (const auto& o : scan.outcomes) {
    const auto& b = o.base;
    t.row().cell(o.index).cell(b.x).cell(b.y).cell(b.distance).cell(b.s).cell(b.j_lo);
    t.cell(b.j_hi).cell(b.ratio).cell(b.d).cell(b.shift).cell(b.base_success ? 1 : 0);
    t.cell(o.flow ? o.flow->hit_fraction : std::nan(""));
    t.cell(o.flow ? (o.flow->flow_success ? 1 : 0) : 0).cell(o.success ? 1 : 0);
  }
  out.tables.push_back({"pairs.csv", t.str()});
  return out;
}

CommandResult cmd_rigidity(const ExperimentConfig& cfg, const json& params, unsigned threads) {
  std::vector<double> times;
  for (const auto& tj : params.at("times")) {
    if (!tj.is_number()) schema("times must be a list of numbers");
    times.push_back(tj.get<double>());
  }
  if (times.empty()) {
    const double lo = number_at(params, "t_min"), hi = number_at(params, "t_max"),
                 step = number_at(params, "t_step");
    require(step > 0 && hi >= lo, "bad time range");
    const auto count = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::int64_t i = 0; i < count; ++i) times.push_back(lo + static_cast<double>(i) * step);
  }
  NearReturnOptions opts;
  opts.include_zero = params.at("include_zero").get<bool>();
  const RigidityProfile prof =
      rigidity_scan(cfg.rotation(), cfg.roof_function(), times, number_at(params, "epsilon"),
                    int_at(params, "grid"), number_at(params, "threshold"), opts, threads);
  CommandResult out;
  out.report = base_report("rigidity-scan", cfg, params);
  out.report["profile"] = prof.summary_json();
  CsvTable t({"t", "epsilon", "mu_hat", "window_lo", "window_hi"});
  for (const auto& r : prof.rows)
    t.row().cell(r.t).cell(r.epsilon).cell(r.mu_hat).cell(r.window_lo).cell(r.window_hi);
  out.tables.push_back({"profile.csv", t.str()});
  return out;
}

CommandResult cmd_orbit(const ExperimentConfig& cfg, const json& params) {
  const SpecialFlow flow(cfg.rotation(), cfg.roof_function());
  const FlowPoint p{CirclePoint::from_double(number_at(params, "x")), number_at(params, "s")};
  flow.validate(p);
  const auto samples = flow_orbit(flow, p, number_at(params, "dt"), int_at(params, "count"));
  CsvTable t({"t", "x", "s"});
  for (const auto& o : samples) t.row().cell(o.t).cell(o.x).cell(o.s);
  CommandResult out;
  out.report = base_report("flow-orbit", cfg, params);
  out.report["samples"] = samples.size();
  out.tables.push_back({"orbit.csv", t.str()});
  return out;
}

CommandResult cmd_section(const ExperimentConfig& cfg, const json& params, unsigned threads) {
  const std::string name = params.at("system").get<std::string>();
  if (name != "normalized" && name != "singular") schema("system must be normalized or singular");
  const PlanarSystem sys = name == "normalized" ? PlanarSystem::normalized : PlanarSystem::singular;
  const double r = number_at(params, "r");
  const std::int64_t count = int_at(params, "thetas");
  const double tol = number_at(params, "tol");
  require(r > 0 && count >= 1 && tol > 0, "r, thetas and tol must be positive");

  struct Row {
    double theta, tau = std::nan(""), closed = std::nan("");
    bool returned = false, averaged = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(count));
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    Row row;
    row.theta = 2 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    if (sys == PlanarSystem::normalized) row.closed = first_return_closed(r, row.theta);
    try {
      const ReturnEvent ev = first_return_numeric(sys, r, row.theta, tol);
      row.tau = ev.tau;
      row.returned = true;
      row.averaged = ev.averaged;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::no_return) throw;
    }
    rows[i] = row;
  });
  CsvTable t({"r", "theta", "tau_numeric", "tau_closed", "abs_err"});
  double worst = 0.0;
  std::int64_t no_return = 0, averaged = 0;
  for (const auto& row : rows) {
    const double err = std::abs(row.tau - row.closed);
    if (row.returned && sys == PlanarSystem::normalized) worst = std::max(worst, err);
    no_return += !row.returned;
    averaged += row.averaged;
    t.row().cell(r).cell(row.theta).cell(row.tau).cell(row.closed).cell(err);
  }
  CommandResult out;
  out.report = base_report("section-return", cfg, params);
  out.report["system"] = name;
  out.report["thetas"] = count;
  out.report["no_return"] = no_return;
  out.report["averaged"] = averaged;
  out.report["max_abs_err"] = sys == PlanarSystem::normalized ? json(worst) : json(nullptr);
  out.tables.push_back({"returns.csv", t.str()});

  if (params.at("separatrix").get<bool>()) {
    const SeparatrixEstimate est = separatrix_return_time();
    out.report["separatrix"] = {{"tau0", est.tau0},           {"error", est.error},
                                {"eta", est.eta},             {"tau", est.tau},
                                {"richardson", est.richardson}, {"monotone", est.monotone},
                                {"shrinking", est.shrinking}};
  }
  const json& tr = params.at("trajectory");
  if (tr.is_object()) {
    for (const auto& [key, value] : tr.items()) {
      if (key != "x" && key != "y" && key != "T" && key != "tol") schema("unknown trajectory key '" + key + "'");
      if (!value.is_number()) schema("trajectory values must be numbers");
    }
    IntegrateOptions io;
    io.tol = tr.value("tol", 1e-9);
    const double x0 = tr.value("x", 2.0), y0 = tr.value("y", 0.0);
    const IntegrateResult res =
        integrate(PlanarSystem::singular, {x0, y0, 0.0}, tr.value("T", 1.0), io);
    CsvTable tt({"t", "x", "y", "H"});
    double drift = 0.0;
    const double h0 = hamiltonian(x0, y0);
    for (const auto& p : res.trajectory) {
      tt.row().cell(p.t).cell(p.x).cell(p.y).cell(p.H);
      drift = std::max(drift, std::abs(p.H - h0));
    }
    out.report["trajectory"] = {{"points", res.trajectory.size()},
                                {"steps", res.steps},
                                {"H0", h0},
                                {"max_abs_H_drift", drift}};
    out.tables.push_back({"trajectory.csv", tt.str()});
  }
  return out;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"cf",        "birkhoff",      "trow-check",
                                                 "ratner-scan", "rigidity-scan", "flow-orbit",
                                                 "section-return"};
  return names;
}

json command_defaults(std::string_view command) {
  const json& table = defaults_table();
  auto it = table.find(std::string(command));
  if (it == table.end()) schema("unknown command '" + std::string(command) + "'");
  return *it;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) schema("config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "rotation") {
        if (!value.is_object()) schema("rotation must be an object");
        for (const auto& [k2, v2] : value.items()) {
          if (k2 == "alpha") {
            c.alpha = v2.get<std::string>();
          } else if (k2 == "depth") {
            if (!v2.is_number_integer()) schema("rotation.depth must be an integer");
            c.depth = v2.get<int>();
          } else {
            schema("unknown rotation key '" + k2 + "'");
          }
        }
      } else if (key == "roof") {
        if (value.is_string()) {
          std::filesystem::path p = value.get<std::string>();
          if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
          json loaded;
          try {
            loaded = json::parse(read_text_file(p));
          } catch (const json::exception& e) {
            schema("roof file " + p.string() + ": " + e.what());
          }
          c.roof = loaded;
        } else if (value.is_object() || value.is_null()) {
          c.roof = value;
        } else {
          schema("roof must be an object, a file name or null");
        }
        if (!c.roof.is_null()) (void)RoofFunction::from_json(c.roof);
      } else if (key == "seed") {
        if (!value.is_number_unsigned() && !value.is_number_integer()) schema("seed must be an integer");
        if (value.is_number_integer() && value.get<std::int64_t>() < 0) schema("seed must be non-negative");
        c.seed = value.get<std::uint64_t>();
      } else if (key == "params") {
        if (!value.is_object()) schema("params must be an object");
        c.params = value;
      } else {
        schema("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    schema(std::string("config: ") + e.what());
  }
  if (c.depth < 1) schema("rotation.depth must be at least 1");
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"rotation", {{"alpha", alpha}, {"depth", depth}}},
          {"roof", roof.is_null() ? RoofFunction::canonical().to_json() : roof},
          {"seed", seed},
          {"params", params}};
}

Rotation ExperimentConfig::rotation() const { return Rotation::expand(alpha, depth); }

RoofFunction ExperimentConfig::roof_function() const {
  return roof.is_null() ? RoofFunction::canonical() : RoofFunction::from_json(roof);
}

CommandResult run_command(std::string_view command, const ExperimentConfig& cfg, unsigned threads) {
  const json params = merged_params(command, cfg.params);
  try {
    if (command == "cf") return cmd_cf(cfg, params);
    if (command == "birkhoff") return cmd_birkhoff(cfg, params);
    if (command == "trow-check") return cmd_trow(cfg, params, threads);
    if (command == "ratner-scan") return cmd_ratner(cfg, params, threads);
    if (command == "rigidity-scan") return cmd_rigidity(cfg, params, threads);
    if (command == "flow-orbit") return cmd_orbit(cfg, params);
    if (command == "section-return") return cmd_section(cfg, params, threads);
  } catch (const json::exception& e) {
    schema(std::string("params: ") + e.what());
  }
  schema("unknown command '" + std::string(command) + "'");
}

std::vector<SelftestCheck> run_selftest(double scale, std::uint64_t seed) {
  std::vector<SelftestCheck> checks;
  auto add = [&](std::string name, double value, double tol) {
    const double t = tol * scale;
    checks.push_back({std::move(name), value <= t, value, t});
  };
  const RoofFunction f = RoofFunction::canonical();
  std::mt19937_64 rng(splitmix64(seed));

  for (const char* alpha : {"golden", "sqrt2m1"}) {
    const Rotation rot = Rotation::expand(alpha, 40);
    double worst = 0.0;
    std::uniform_int_distribution<std::int64_t> nd(-200, 200);
    for (int i = 0; i < 200; ++i) {
      const std::int64_t m = nd(rng), n = nd(rng);
      const CirclePoint x = CirclePoint::from_double(uniform01(rng));
      const double lhs = birkhoff_naive(rot, f, m + n, x);
      const double rhs = birkhoff_naive(rot, f, m, x) + birkhoff_naive(rot, f, n, rot.apply(x, m));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    add(std::string("cocycle_identity_") + alpha, worst, 1e-9);
  }

  const Rotation golden = Rotation::expand("golden", 40);
  add("trow_worked_case",
      std::abs(pl_difference(golden, f, 3, CirclePoint::from_double(0.3),
                             CirclePoint::from_double(0.4)) + 0.7),
      1e-9);
  {
    const RoofFunction fpl = f.decompose().first;
    double worst = 0.0;
    std::uniform_int_distribution<std::int64_t> nd(1, 2000);
    for (int i = 0; i < 200; ++i) {
      const std::int64_t n = nd(rng);
      const CirclePoint x = CirclePoint::from_double(uniform01(rng));
      const CirclePoint y = CirclePoint::from_double(uniform01(rng));
      if (x == y) continue;
      const double naive = birkhoff_naive(golden, fpl, n, y) - birkhoff_naive(golden, fpl, n, x);
      worst = std::max(worst, std::abs(pl_difference(golden, f, n, x, y) - naive));
    }
    add("trow_random", worst, 1e-9);
  }
  {
    const RoofFunction g({0.0, 0.37}, {0.5, 0.25}, 2.0,
                         {AcSegment{AcSegment::Kind::trig, {0.1, 1.0, 0.0}, 0.0, 1.0}});
    double worst = 0.0;
    std::uniform_int_distribution<std::int64_t> nd(-5000, 5000);
    for (int i = 0; i < 100; ++i) {
      const std::int64_t n = nd(rng);
      const CirclePoint x = CirclePoint::from_double(uniform01(rng));
      const double naive = birkhoff_naive(golden, g, n, x);
      const double fast = birkhoff_fast(golden, g, n, x);
      worst = std::max(worst, std::abs(fast - naive) / std::max(1.0, std::abs(naive)));
    }
    add("fast_vs_naive", worst, 1e-9);
  }
  {
    double bad = 0.0;
    for (const char* alpha : {"golden", "sqrt2m1"})
      for (const auto& b : check_convergent_bounds(Rotation::expand(alpha, 36)))
        bad += !(b.lower_holds && b.upper_holds && b.recurrence_holds && b.coprime);
    add("denominator_inequalities", bad, 0.0);
  }
  {
    const auto prof = rigidity_scan(golden, RoofFunction::constant_roof(1.0), {10.0, 11.0, 12.0},
                                    1e-3, 1000, 0.15);
    double worst = 0.0;
    for (const auto& r : prof.rows) worst = std::max(worst, std::abs(r.mu_hat - 1.0));
    add("rigidity_positive_control", worst, 0.0);
  }
  {
    double worst = 0.0;
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 1000; ++i) {
      const double x = u(rng), y = u(rng);
      if (x * x + y * y < 1e-4) continue;
      const Vec2 g = hamiltonian_gradient(x, y);
      const Vec2 v = field_singular(x, y);
      worst = std::max(worst, std::abs(hamiltonian_rate(x, y)) /
                                  (std::abs(g.x * v.x) + std::abs(g.y * v.y) + 1e-300));
    }
    add("hamiltonian_rate", worst, 1e-12);
  }
  {
    double worst = 0.0;
    for (int i = 0; i < 12; ++i) {
      const double theta = 2 * std::numbers::pi * (i + 0.3) / 12;
      const ReturnEvent ev = first_return_numeric(PlanarSystem::normalized, 0.1, theta);
      worst = std::max(worst, std::abs(ev.tau - first_return_closed(0.1, theta)));
    }
    add("return_time_closed_form", worst, 1e-4);
  }
  {
    const SpecialFlow flow(golden, f);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      FlowPoint p{CirclePoint::from_double(uniform01(rng)), 0.0};
      p.s = uniform01(rng) * f.eval(p.x);
      const double t1 = 50 * uniform01(rng), t2 = 50 * uniform01(rng);
      const FlowPoint a = flow.advance(flow.advance(p, t1), t2);
      const FlowPoint b = flow.advance(p, t1 + t2);
      worst = std::max(worst, metric(a, b));
    }
    add("flow_group_law", worst, 1e-9);
  }
  return checks;
}

}  // namespace mildmix
