#include "mildmix/ratner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "mildmix/cocycle.hpp"
#include "mildmix/errors.hpp"
#include "mildmix/numeric.hpp"
#include "mildmix/parallel.hpp"

namespace mildmix {

namespace {

constexpr double kValueTol = 1e-9;
constexpr std::size_t kMaxDSize = 10'000'000;
constexpr int kMaxDraws = 1000;

BigRational exact(double v) {
  int e = 0;
  double m = std::frexp(v, &e);
  BigRational r(static_cast<std::int64_t>(std::ldexp(m, 53)));
  e -= 53;
  BigInt two_e = BigInt(1) << std::abs(e);
  return e >= 0 ? r * BigRational(two_e) : r / BigRational(two_e);
}

bool in_arc(CirclePoint p, CirclePoint a, CirclePoint b) {
  return (p - a - CirclePoint::from_raw(1)).raw() < (b - a).raw();
}

std::vector<double> enumerate_D(const std::vector<double>& jumps, std::int64_t C) {
  std::vector<double> D{0.0};
  for (double d : jumps) {
    std::vector<double> next;
    for (double base : D)
      for (std::int64_t n = 0; n <= 2 * C + 1; ++n) next.push_back(base + static_cast<double>(n) * d);
    std::sort(next.begin(), next.end());
    std::vector<double> unique;
    for (double v : next)
      if (unique.empty() || std::abs(v - unique.back()) > kValueTol * std::max(1.0, std::abs(v)))
        unique.push_back(v);
    if (unique.size() > kMaxDSize)
      throw Error(ErrorKind::out_of_range, "the set D is too large to enumerate");
    D = std::move(unique);
  }
  return D;
}

std::string describe(const Error& e) {
  return std::string(to_string(e.kind())) + ": " + e.what();
}

}  // namespace

double RatnerConfig::kappa_at(double eps) const {
  const double c = static_cast<double>(C);
  return (1.0 / (k * (2 * c + 1))) * std::min(eps / (2 * p * c), 1.0 / (c * c));
}

double RatnerConfig::flow_base_epsilon() const {
  return std::min(c_f * epsilon / (8 * (gamma + C_f)), epsilon / 16);
}

bool RatnerConfig::in_D(double d) const {
  auto it = std::lower_bound(D.begin(), D.end(), d - kValueTol);
  return it != D.end() && std::abs(*it - d) <= kValueTol;
}

nlohmann::json RatnerConfig::to_json() const {
  const double eps1 = flow_base_epsilon();
  return {
      {"rotation", rot.to_json()},
      {"roof", f.to_json()},
      {"C", C},
      {"C_depth", rot.depth()},
      {"C_is_depth_surrogate", true},
      {"k", k},
      {"S", S},
      {"D", D},
      {"p", p},
      {"epsilon", epsilon},
      {"N", N},
      {"gamma", gamma},
      {"kappa", kappa},
      {"delta", delta},
      {"s0", s0},
      {"q_s0", rot.q(s0)},
      {"q_s0_plus_1", rot.q(s0 + 1)},
      {"c_f", c_f},
      {"C_f", C_f},
      {"ac_sup_at_s0", ac_sup_at_s0},
      {"flow_base_epsilon", eps1},
      {"flow_base_kappa", kappa_at(eps1)},
  };
}

RatnerConfig build_config(const Rotation& rot, const RoofFunction& f, double epsilon,
                          std::int64_t N, double gamma) {
  if (!(epsilon > 0)) throw Error(ErrorKind::out_of_range, "epsilon must be positive");
  if (!(gamma > 0)) throw Error(ErrorKind::out_of_range, "gamma must be positive");
  if (N < 0) throw Error(ErrorKind::out_of_range, "N must be non-negative");
  RatnerConfig cfg(rot, f);
  cfg.S = f.sum_of_jumps();
  if (std::abs(cfg.S) < kValueTol)
    throw Error(ErrorKind::zero_jump_sum, "the sum of jumps vanishes");
  const auto b = f.bounds();
  cfg.c_f = b.lower;
  cfg.C_f = b.upper;
  cfg.epsilon = epsilon;
  cfg.N = N;
  cfg.gamma = gamma;
  cfg.C = bounded_type_constant(rot);
  cfg.k = f.jump_count();
  cfg.D = enumerate_D(f.jumps(), cfg.C);

  const double absS = std::abs(cfg.S);
  std::vector<double> cuts{0.0, absS};
  for (double d : cfg.D)
    for (double v : {d, -d})
      if (v > 0 && v < absS) cuts.push_back(v);
  std::sort(cuts.begin(), cuts.end());
  double best_gap = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    double gap = cuts[i] - cuts[i - 1];
    if (gap > best_gap) {
      best_gap = gap;
      cfg.p = 0.5 * (cuts[i] + cuts[i - 1]);
    }
  }
  if (best_gap <= kValueTol * absS)
    throw Error(ErrorKind::no_admissible_shift, "(0, |S|) is covered by D and -D");

  cfg.kappa = cfg.kappa_at(epsilon);
  cfg.ac_variation = f.decompose().second.raw_bounds().variation;
  const double kappa1 = std::min(cfg.kappa, 1.0);
  const RoofFunction f_ac = f.decompose().second;
  for (int s = 0;; ++s) {
    if (s + 1 > rot.depth())
      throw Error(ErrorKind::insufficient_depth,
                  "no admissible s0 within depth " + std::to_string(rot.depth()));
    if (!(kappa1 * static_cast<double>(rot.q(s)) > static_cast<double>(N))) continue;
    if (f.has_ac_part()) {
      cfg.ac_sup_at_s0 = ac_uniform_smallness(rot, f_ac, s, {64, 8}).sup;
      if (!(cfg.ac_sup_at_s0 < epsilon / 2)) continue;
    }
    cfg.s0 = s;
    break;
  }
  cfg.delta = cfg.p / (absS * static_cast<double>(rot.q(cfg.s0 + 1)));
  return cfg;
}

RatnerWitness base_witness(const RatnerConfig& cfg, CirclePoint x, CirclePoint y) {
  return base_witness(cfg, x, y, cfg.epsilon);
}

RatnerWitness base_witness(const RatnerConfig& cfg, CirclePoint x, CirclePoint y,
                           double tolerance) {
  if (x == y) throw Error(ErrorKind::degenerate_pair, "x and y coincide");
  RatnerWitness w;
  w.x = x.to_double();
  w.y = y.to_double();
  w.tolerance = tolerance;
  w.distance = circle_distance(x, y);
  if (!(w.distance < cfg.delta))
    throw Error(ErrorKind::out_of_delta, "||x - y|| = " + std::to_string(w.distance) +
                                             " is not below delta");

  // Orient so that b = a + arc with arc = ||x - y||.
  w.swapped = (y - x).raw() > (x - y).raw();
  const CirclePoint a = w.swapped ? y : x;
  const CirclePoint b = w.swapped ? x : y;
  const std::uint64_t arc_raw = (b - a).raw();
  const double arc = forward_arc(a, b);

  // Scale: q_s <= p / (|S| arc) < q_{s+1}, decided exactly.
  const BigRational lhs_unit = exact(std::abs(cfg.S)) * BigRational(BigInt(arc_raw));
  const BigRational rhs = exact(cfg.p) * BigRational(BigInt(1) << 64);
  const auto& q = cfg.rot.denominators();
  int s = -1;
  for (int i = 0; i < static_cast<int>(q.size()); ++i) {
    if (BigRational(q[i]) * lhs_unit <= rhs) {
      s = i;
    } else {
      break;
    }
  }
  if (s < 0) throw Error(ErrorKind::out_of_delta, "pair is too far apart for any scale");
  if (s + 1 >= static_cast<int>(q.size()))
    throw Error(ErrorKind::insufficient_depth, "scale exceeds the computed depth");
  w.s = s;
  w.scale_certified = BigRational(q[s]) * lhs_unit <= rhs && rhs < BigRational(q[s + 1]) * lhs_unit;
  w.q_s = cfg.rot.q(s);
  w.q_next = cfg.rot.q(s + 1);

  // The tolerance quantity equals sigma p - n S arc minus the smooth-part
  // difference, which stays below 2 Var(f_ac) on this range; indices outside
  // the resulting band cannot qualify and are skipped.
  const double absS = std::abs(cfg.S);
  const double band = tolerance + 2 * cfg.ac_variation + 1e-9;
  const double n_lo = std::floor((cfg.p - band) / (absS * arc)) - 1;
  const double n_hi = std::ceil((cfg.p + band) / (absS * arc)) + 1;
  const std::int64_t scan_lo =
      n_lo > static_cast<double>(w.q_s) ? static_cast<std::int64_t>(n_lo) : w.q_s;
  const std::int64_t scan_hi =
      n_hi < static_cast<double>(w.q_next) ? static_cast<std::int64_t>(n_hi) : w.q_next;
  if (scan_hi - scan_lo > cfg.max_scan)
    throw Error(ErrorKind::window_exceeded, "scan range exceeds the limit");

  const RoofFunction& f = cfg.f;
  const Rotation& rot = cfg.rot;
  const CirclePoint step = rot.step();
  const double sp = cfg.sigma() * cfg.p;
  const double expected_step = cfg.S * arc;

  std::int64_t n = scan_lo;
  NeumaierSum diff;  // f^(n)(a) - f^(n)(b)
  diff += birkhoff_fast(rot, f, n, a) - birkhoff_fast(rot, f, n, b);
  double dbar = jump_count(rot, f, n, a, b);
  CirclePoint an = rot.apply(a, n), bn = rot.apply(b, n);
  std::vector<CirclePoint> orbit_bp;
  for (auto beta : f.breakpoints()) orbit_bp.push_back(beta - step.times(n));

  std::int64_t run_lo = -1;
  double run_d = 0.0, run_dev = 0.0;
  auto close_run = [&](std::int64_t end) {
    if (run_lo < 0) return;
    if (end - run_lo > w.length()) {
      w.found = true;
      w.j_lo = run_lo;
      w.j_hi = end;
      w.d = run_d;
      w.max_deviation = run_dev;
    }
    run_lo = -1;
  };

  for (;; ++n) {
    const double v = diff.value() + sp - dbar;
    const bool good = std::abs(v) < tolerance;
    if (good && run_lo >= 0 && std::abs(dbar - run_d) <= kValueTol) {
      run_dev = std::max(run_dev, std::abs(v));
    } else {
      close_run(n - 1);
      if (good) {
        run_lo = n;
        run_d = dbar;
        run_dev = std::abs(v);
      }
    }
    if (n >= scan_hi) break;

    // n -> n + 1
    const double pa = f.pl_value(an), pb = f.pl_value(bn);
    double inc = 0.0;
    for (std::size_t i = 0; i < orbit_bp.size(); ++i) {
      if (in_arc(orbit_bp[i], a, b)) inc += f.jumps()[i];
      orbit_bp[i] = orbit_bp[i] - step;
    }
    if (std::abs(pb - pa + inc - expected_step) > kValueTol) ++w.monotone_violations;
    double ga = 0.0, gb = 0.0;
    if (f.has_ac_part()) {
      ga = f.ac_value(an.to_double());
      gb = f.ac_value(bn.to_double());
    }
    diff += (pa - pb) + (ga - gb);
    dbar += inc;
    an += step;
    bn += step;
  }
  close_run(n);

  if (!w.found) {
    w.failure = "no index in [q_s, q_{s+1}] meets the tolerance";
    return w;
  }
  const double oriented = sp - w.d;
  w.shift = w.swapped ? -oriented : oriented;
  w.ratio = static_cast<double>(w.length()) / static_cast<double>(w.q_next);
  w.d_in_D = cfg.in_D(w.d);
  w.kappa_ok = w.ratio >= cfg.kappa_at(tolerance);
  const bool n_ok = w.M_prime() >= cfg.N && w.L_prime() >= cfg.N;
  w.base_success = w.d_in_D && w.kappa_ok && n_ok && w.scale_certified &&
                   w.monotone_violations == 0;
  if (!w.base_success) {
    if (!w.d_in_D) w.failure = "jump count on J is not in D";
    else if (!w.kappa_ok) w.failure = "|J| / q_{s+1} below kappa";
    else if (!n_ok) w.failure = "M' or L' below N";
    else if (!w.scale_certified) w.failure = "scale bracketing not certified";
    else w.failure = "monotone step property violated";
  }
  return w;
}

bool same_orbit(const Rotation& rot, CirclePoint x, CirclePoint y) {
  const BigInt limit = BigInt(1) << 31;
  const BigInt qk = rot.denominators().back();
  const auto m = static_cast<std::int64_t>(qk < limit ? qk : limit);
  const auto eta = CirclePoint::from_double(1e-12);
  const CirclePoint lo = y - eta, hi = y + eta;
  const CirclePoint step = rot.step();
  return count_in_arc(x, step, m + 1, lo, hi) > 0 ||
         count_in_arc(x - step, -step, m, lo, hi) > 0;
}

RatnerWitness flow_witness(const RatnerConfig& cfg, const FlowPoint& p1, const FlowPoint& p2) {
  if (p1.x == p2.x) throw Error(ErrorKind::degenerate_pair, "base points coincide");
  if (!(metric(p1, p2) < cfg.delta))
    throw Error(ErrorKind::out_of_delta, "flow points are not within delta");
  if (same_orbit(cfg.rot, p1.x, p2.x))
    throw Error(ErrorKind::same_orbit, "base points lie on one orbit of the rotation");
  const SpecialFlow flow(cfg.rot, cfg.f);
  flow.validate(p1);
  flow.validate(p2);

  const double eps = cfg.epsilon;
  const double eps1 = cfg.flow_base_epsilon();
  RatnerWitness w = base_witness(cfg, p1.x, p2.x, eps1);
  w.flow_checked = true;
  w.s1 = p1.s;
  w.s2 = p2.s;
  if (!w.found) return w;

  const std::int64_t Mp = w.M_prime(), Lp = w.L_prime();
  w.M = (flow.birkhoff(Mp, p1.x) - p1.s) / cfg.gamma;
  w.L = flow.birkhoff(Lp, cfg.rot.apply(p1.x, Mp)) / cfg.gamma;
  w.k_lo = static_cast<std::int64_t>(std::ceil(w.M));
  w.k_hi = static_cast<std::int64_t>(std::floor(w.M + w.L));
  const std::int64_t count = w.k_hi - w.k_lo + 1;

  if (count > 0) {
    std::int64_t m = 0, dm = 0;
    FlowPoint q1 = flow.advance(p1, static_cast<double>(w.k_lo) * cfg.gamma, m);
    FlowPoint q2 = flow.advance(p2, static_cast<double>(w.k_lo) * cfg.gamma + w.shift);
    for (std::int64_t kk = w.k_lo; kk <= w.k_hi; ++kk) {
      const bool hit = metric(q1, q2) < eps;
      w.hits += hit;
      const bool good_height = q1.s > eps / 8 && q1.s < flow.roof().eval(q1.x) - eps / 8;
      if (good_height && m >= w.j_lo && m + 1 <= w.j_hi) {
        ++w.b_size;
        if (!hit) ++w.b_violations;
      }
      if (kk == w.k_hi) break;
      q1 = flow.advance(q1, cfg.gamma, dm);
      m += dm;
      q2 = flow.advance(q2, cfg.gamma);
    }
    w.hit_fraction = static_cast<double>(w.hits) / static_cast<double>(count);
  }

  const double cC = cfg.c_f / cfg.C_f;
  const double LM = w.M > 0 ? w.L / w.M : 0.0;
  const double LpMp = Mp > 0 ? static_cast<double>(Lp) / static_cast<double>(Mp) : 0.0;
  w.window_ratio_ok = LM >= cC * LpMp * (1 - 1e-12);
  const bool ratio_ok = LM >= cC * cfg.kappa_at(eps1);
  const bool n_ok = w.M >= static_cast<double>(cfg.N) && w.L >= static_cast<double>(cfg.N);
  w.flow_success = w.d_in_D && w.hit_fraction > 1 - eps && ratio_ok && n_ok &&
                   w.b_violations == 0 && w.window_ratio_ok;
  if (w.flow_success) {
    w.failure.clear();
  } else if (!(w.hit_fraction > 1 - eps)) {
    w.failure = "hit fraction not above 1 - epsilon";
  } else if (!n_ok) {
    w.failure = "flow window M or L below N";
  } else if (!ratio_ok || !w.window_ratio_ok) {
    w.failure = "flow window ratio L/M too small";
  } else if (w.b_violations) {
    w.failure = "good-set point missed";
  } else {
    w.failure = "jump count on J is not in D";
  }
  return w;
}

namespace {

struct Draw {
  FlowPoint p1, p2;
  int rejected = 0;
};

// Uniform draw of an admissible pair; heights only matter for the flow check.
Draw draw_pair(const RatnerConfig& cfg, std::mt19937_64& rng, bool with_heights) {
  Draw d;
  const double delta = cfg.delta;
  for (; d.rejected < kMaxDraws; ++d.rejected) {
    const auto x = CirclePoint::from_double(uniform01(rng));
    const double u = (2 * uniform01(rng) - 1) * delta;
    double v = 0.0;
    if (with_heights) {
      v = (2 * uniform01(rng) - 1) * delta;
      if (std::abs(u) + std::abs(v) >= delta) {
        continue;
      }
    }
    const auto y = x + CirclePoint::from_double(u);
    if (x == y || !(circle_distance(x, y) < delta)) continue;
    const double fx = cfg.f.eval(x);
    const double lo = cfg.epsilon / 8, hi = fx - cfg.epsilon / 8;
    const double s1 = with_heights ? lo + uniform01(rng) * (hi - lo) : 0.0;
    const double s2 = s1 + v;
    d.p1 = {x, s1};
    d.p2 = {y, s2};
    if (with_heights && !(s2 >= 0 && s2 < cfg.f.eval(y) && metric(d.p1, d.p2) < delta)) continue;
    if (same_orbit(cfg.rot, x, y)) continue;
    return d;
  }
  throw Error(ErrorKind::out_of_range, "could not draw an admissible pair");
}

nlohmann::json quantiles(std::vector<double> v) {
  if (v.empty()) return nullptr;
  std::sort(v.begin(), v.end());
  auto at = [&](double q) {
    auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1) + 0.5));
    return v[i];
  };
  return {{"min", v.front()}, {"q05", at(0.05)}, {"q25", at(0.25)}, {"median", at(0.5)},
          {"q75", at(0.75)},  {"q95", at(0.95)}, {"max", v.back()}};
}

}  // namespace

ScanReport ratner_scan(const RatnerConfig& cfg, const ScanOptions& opts) {
  if (opts.pairs < 1) throw Error(ErrorKind::out_of_range, "ratner_scan needs pairs >= 1");
  ScanReport report;
  report.outcomes.resize(static_cast<std::size_t>(opts.pairs));
  parallel_for(report.outcomes.size(), opts.threads, [&](std::size_t i) {
    PairOutcome& out = report.outcomes[i];
    out.index = static_cast<std::int64_t>(i);
    std::mt19937_64 rng(splitmix64(opts.seed ^ splitmix64(i + 1)));
    const Draw d = draw_pair(cfg, rng, opts.flow);
    out.resampled = d.rejected;
    try {
      out.base = base_witness(cfg, d.p1.x, d.p2.x);
    } catch (const Error& e) {
      out.base.x = d.p1.x.to_double();
      out.base.y = d.p2.x.to_double();
      out.base.failure = describe(e);
    }
    if (opts.flow) {
      try {
        out.flow = flow_witness(cfg, d.p1, d.p2);
      } catch (const Error& e) {
        RatnerWitness failed;
        failed.x = d.p1.x.to_double();
        failed.y = d.p2.x.to_double();
        failed.failure = describe(e);
        out.flow = failed;
      }
    }
    out.success = out.base.base_success && (!opts.flow || out.flow->flow_success);
  });
  std::int64_t ok = 0;
  for (const auto& o : report.outcomes) ok += o.success;
  report.success_rate = static_cast<double>(ok) / static_cast<double>(opts.pairs);
  return report;
}

nlohmann::json ScanReport::to_json(const RatnerConfig& cfg) const {
  std::vector<double> ratio, hit, lm;
  std::map<std::string, std::int64_t> d_hist, shift_hist;
  std::int64_t base_ok = 0, flow_ok = 0, flow_runs = 0, resampled = 0, b_total = 0,
               b_viol = 0, monotone = 0;
  nlohmann::json failures = nlohmann::json::array();
  auto key = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& o : outcomes) {
    resampled += o.resampled;
    const auto& b = o.base;
    base_ok += b.base_success;
    monotone += b.monotone_violations;
    if (b.found) {
      ratio.push_back(b.ratio);
      ++d_hist[key(b.d)];
      ++shift_hist[key(b.shift)];
    }
    if (o.flow) {
      ++flow_runs;
      flow_ok += o.flow->flow_success;
      b_total += o.flow->b_size;
      b_viol += o.flow->b_violations;
      if (o.flow->found) {
        hit.push_back(o.flow->hit_fraction);
        if (o.flow->M > 0) lm.push_back(o.flow->L / o.flow->M);
      }
    }
    if (!o.success) {
      std::string reason = !b.base_success ? "base: " + b.failure
                                           : "flow: " + (o.flow ? o.flow->failure : "");
      failures.push_back({{"index", o.index}, {"x", b.x}, {"y", b.y}, {"reason", reason}});
    }
  }
  const double n = static_cast<double>(outcomes.size());
  nlohmann::json j;
  j["config"] = cfg.to_json();
  j["pairs"] = outcomes.size();
  j["success_rate"] = success_rate;
  j["resampled_draws"] = resampled;
  j["base"] = {
      {"success_rate", static_cast<double>(base_ok) / n},
      {"ratio_quantiles", quantiles(ratio)},
      {"empirical_kappa", ratio.empty() ? nlohmann::json(nullptr)
                                        : nlohmann::json(*std::min_element(ratio.begin(), ratio.end()))},
      {"d_histogram", d_hist},
      {"shift_histogram", shift_hist},
      {"monotone_violations", monotone},
  };
  if (flow_runs) {
    j["flow"] = {
        {"success_rate", static_cast<double>(flow_ok) / static_cast<double>(flow_runs)},
        {"hit_fraction_quantiles", quantiles(hit)},
        {"window_ratio_quantiles", quantiles(lm)},
        {"empirical_kappa", lm.empty() ? nlohmann::json(nullptr)
                                       : nlohmann::json(*std::min_element(lm.begin(), lm.end()))},
        {"good_set_points", b_total},
        {"good_set_misses", b_viol},
    };
  }
  j["failures"] = failures;
  return j;
}

}  // namespace mildmix
