#include "mildmix/poincare.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "mildmix/errors.hpp"

namespace mildmix {

namespace {

using State = std::array<double, 3>;  // x, y, t

template <class T>
std::array<T, 2> g_of(PlanarSystem sys, T x, T y) {
  if (sys == PlanarSystem::normalized) return {x, -y};
  return {-y, x * (x - T(1)) + y * y};
}

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Rhs {
  PlanarSystem sys;
  bool rescaled;

  State operator()(const State& s) const {
    if (rescaled) {
      auto g = g_of(sys, s[0], s[1]);
      return {g[0], g[1], s[0] * s[0] + s[1] * s[1]};
    }
    Vec2 f = field(sys, s[0], s[1]);
    return {f.x, f.y, 1.0};
  }
};

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (const auto& [c, k] : terms) acc += c * (*k)[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] += h * acc;
  }
  return out;
}

struct Dense {
  std::array<State, 5> r;
  State at(double th) const {
    const double th1 = 1.0 - th;
    State out;
    for (std::size_t i = 0; i < 3; ++i)
      out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
    return out;
  }
};

struct StepResult {
  State y1, k7;
  double err;
  Dense dense;
};

StepResult dopri_step(const Rhs& f, const State& y0, const State& k1, double h, double tol) {
  const State k2 = f(axpy(y0, h, {{a21, &k1}}));
  const State k3 = f(axpy(y0, h, {{a31, &k1}, {a32, &k2}}));
  const State k4 = f(axpy(y0, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
  const State k5 = f(axpy(y0, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
  const State k6 = f(axpy(y0, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
  StepResult out;
  out.y1 = axpy(y0, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
  out.k7 = f(out.y1);
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * out.k7[i]);
    const double sc = tol + tol * std::max(std::abs(y0[i]), std::abs(out.y1[i]));
    sum += (e / sc) * (e / sc);
  }
  // Error per unit step, so the global error stays of order tol over unit times.
  out.err = std::sqrt(sum / 3) / std::min(1.0, std::abs(h));
  for (std::size_t i = 0; i < 3; ++i) {
    const double ydiff = out.y1[i] - y0[i];
    const double bspl = h * k1[i] - ydiff;
    out.dense.r[0][i] = y0[i];
    out.dense.r[1][i] = ydiff;
    out.dense.r[2][i] = bspl;
    out.dense.r[3][i] = ydiff - h * out.k7[i] - bspl;
    out.dense.r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                             d6 * k6[i] + d7 * out.k7[i]);
  }
  return out;
}

// Smallest th in (0, 1] where fn(dense(th)) reaches its crossing, by bisection.
template <class Fn>
double locate(const Dense& dense, Fn&& crossed) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (crossed(dense.at(mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double radius2(const State& s) { return s[0] * s[0] + s[1] * s[1]; }

}  // namespace

Vec2 field(PlanarSystem sys, double x, double y) {
  const double r2 = x * x + y * y;
  if (r2 == 0.0) throw Error(ErrorKind::singularity, "vector field evaluated at the origin");
  auto g = g_of(sys, x, y);
  return {g[0] / r2, g[1] / r2};
}

Vec2 field_singular(double x, double y) { return field(PlanarSystem::singular, x, y); }

Vec2 rescaled_field(PlanarSystem sys, double x, double y) {
  auto g = g_of(sys, x, y);
  return {g[0], g[1]};
}

double hamiltonian(double x, double y) {
  return 0.5 * std::exp(2 * x) * (y * y + (x - 1) * (x - 1));
}

Vec2 hamiltonian_gradient(double x, double y) {
  const double e = std::exp(2 * x);
  return {e * (y * y + (x - 1) * (x - 1) + (x - 1)), e * y};
}

double hamiltonian_rate(double x, double y) {
  const Vec2 g = hamiltonian_gradient(x, y);
  const Vec2 f = field_singular(x, y);
  return g.x * f.x + g.y * f.y;
}

double invariant_density(double x, double y) { return std::exp(2 * x) * (x * x + y * y); }

double density_divergence(double x, double y) {
  using C = std::complex<double>;
  constexpr double h = 1e-30;
  auto flux = [](C a, C b) {
    const C r2 = a * a + b * b;
    const C rho = std::exp(2.0 * a) * r2;
    auto g = g_of(PlanarSystem::singular, a, b);
    return std::array<C, 2>{rho * (g[0] / r2), rho * (g[1] / r2)};
  };
  const double dx = flux(C(x, h), C(y, 0))[0].imag() / h;
  const double dy = flux(C(x, 0), C(y, h))[1].imag() / h;
  return dx + dy;
}

IntegrateResult integrate(PlanarSystem sys, PlanarState start, std::optional<double> T,
                          const IntegrateOptions& opts) {
  if (start.x == 0.0 && start.y == 0.0)
    throw Error(ErrorKind::singularity, "integration started at the origin");
  if (!(opts.tol > 0)) throw Error(ErrorKind::out_of_range, "tol must be positive");
  IntegrateResult res;
  State y{start.x, start.y, start.t};
  auto record = [&](const State& s) {
    if (opts.record) res.trajectory.push_back({s[2], s[0], s[1], hamiltonian(s[0], s[1])});
  };
  record(y);
  res.end = start;

  const double dir = (T && *T < start.t) ? -1.0 : 1.0;
  if (T && *T == start.t) {
    res.reached_time = true;
    return res;
  }
  // A rest point never moves; report it as reached.
  {
    auto g = g_of(sys, y[0], y[1]);
    if (g[0] == 0.0 && g[1] == 0.0) {
      if (T) y[2] = *T;
      res.end = {y[0], y[1], y[2]};
      res.reached_time = T.has_value();
      record(y);
      return res;
    }
  }

  using Mode = IntegrateOptions::Mode;
  auto want_rescaled = [&](const State& s, bool current) {
    if (opts.mode == Mode::direct) return false;
    if (opts.mode == Mode::rescaled) return true;
    const double r = std::sqrt(radius2(s));
    return current ? r < 1.2 * opts.r_switch : r < opts.r_switch;
  };

  bool rescaled = want_rescaled(y, false);
  Rhs rhs{sys, rescaled};
  State k1 = rhs(y);
  double h = dir * (rescaled ? 1e-2 : 1e-3);
  // Set when the step was shortened to end exactly at T.
  bool landing = false;
  if (T && !rescaled && std::abs(*T - y[2]) <= std::abs(h)) {
    h = *T - y[2];
    landing = true;
  }
  double sigma = 0.0;
  double user_prev = opts.event ? opts.event({y[0], y[1], y[2]}) : 0.0;

  while (true) {
    if (res.steps + res.rejected >= opts.max_steps)
      throw Error(ErrorKind::step_failure, "step budget exhausted");
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(sigma)))
      throw Error(ErrorKind::step_failure, "step size underflow");
    StepResult st = dopri_step(rhs, y, k1, h, opts.tol);
    if (!(st.err <= 1.0)) {
      ++res.rejected;
      const double fac = std::isfinite(st.err) ? std::max(0.2, 0.9 * std::pow(st.err, -0.2)) : 0.2;
      h *= fac;
      landing = false;
      continue;
    }
    ++res.steps;

    // Events inside the accepted step; earliest wins.
    double th_hit = 2.0;
    enum { none, time_hit, user_hit } which = none;
    if (T && dir * (st.y1[2] - *T) >= 0) {
      const double target = *T;
      th_hit = locate(st.dense, [&](const State& s) { return dir * (s[2] - target) >= 0; });
      which = time_hit;
    } else if (landing) {
      th_hit = 1.0;
      which = time_hit;
    }
    if (opts.event) {
      const double user_new = opts.event({st.y1[0], st.y1[1], st.y1[2]});
      if (user_prev < 0 && user_new >= 0) {
        double th = locate(st.dense, [&](const State& s) {
          return opts.event({s[0], s[1], s[2]}) >= 0;
        });
        if (th < th_hit) {
          th_hit = th;
          which = user_hit;
        }
      }
      user_prev = user_new;
    }
    if (which != none) {
      State s = st.dense.at(th_hit);
      if (which == time_hit) s[2] = *T;
      record(s);
      res.end = {s[0], s[1], s[2]};
      res.reached_time = which == time_hit;
      res.event_fired = which == user_hit;
      return res;
    }

    y = st.y1;
    k1 = st.k7;
    sigma += h;
    record(y);
    res.end = {y[0], y[1], y[2]};
    const double r2 = radius2(y);
    if (r2 < opts.capture_radius * opts.capture_radius) {
      res.captured = true;
      return res;
    }

    double fac = st.err > 0 ? 0.9 * std::pow(st.err, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
    const bool next = want_rescaled(y, rescaled);
    if (next != rescaled) {
      // dt = |z|^2 d(sigma)
      h = next ? h / r2 : h * r2;
      rescaled = next;
      rhs = Rhs{sys, rescaled};
      k1 = rhs(y);
    }
    landing = false;
    if (T && !rescaled && dir * (y[2] + h - *T) >= 0) {
      h = *T - y[2];
      landing = true;
    }
  }
}

double first_return_closed(double r, double theta) { return -r * r * std::cos(2 * theta); }

namespace {

ReturnEvent return_once(PlanarSystem sys, double r, double theta, double tol, bool& captured) {
  const double x0 = r * std::cos(theta), y0 = r * std::sin(theta);
  const Vec2 g = rescaled_field(sys, x0, y0);
  const double gnorm = std::hypot(g.x, g.y);
  const double radial = gnorm > 0 ? (x0 * g.x + y0 * g.y) / (r * gnorm) : 0.0;
  if (std::abs(radial) < 1e-9)
    throw Error(ErrorKind::no_return, "start is tangent to the section circle");
  const double dir = radial < 0 ? 1.0 : -1.0;

  IntegrateOptions opts;
  opts.tol = tol;
  opts.record = false;
  opts.capture_radius = 1e-6 * r;
  const double r2 = r * r;
  opts.event = [r2](const PlanarState& s) { return s.x * s.x + s.y * s.y - r2; };
  // Unbounded in time; direction from the sign of a nominal horizon.
  auto res = integrate(sys, {x0, y0, 0.0}, dir * std::numeric_limits<double>::infinity(), opts);
  captured = res.captured;
  ReturnEvent ev;
  ev.r = r;
  ev.theta = theta;
  ev.tau = res.end.t;
  ev.exit_x = res.end.x;
  ev.exit_y = res.end.y;
  ev.exit_theta = std::atan2(res.end.y, res.end.x);
  ev.steps = res.steps;
  if (!captured && !res.event_fired)
    throw Error(ErrorKind::no_return, "trajectory did not return to the circle");
  return ev;
}

}  // namespace

ReturnEvent first_return_numeric(PlanarSystem sys, double r, double theta, double tol) {
  if (!(r > 0)) throw Error(ErrorKind::out_of_range, "r must be positive");
  bool captured = false;
  ReturnEvent ev = return_once(sys, r, theta, tol, captured);
  if (!captured) return ev;
  // The orbit runs into the singular point; the return time is continued by
  // the symmetric average of the neighbouring orbits.
  constexpr double h = 1e-4;
  bool cap_plus = false, cap_minus = false;
  ReturnEvent plus = return_once(sys, r, theta + h, tol, cap_plus);
  ReturnEvent minus = return_once(sys, r, theta - h, tol, cap_minus);
  if (cap_plus || cap_minus)
    throw Error(ErrorKind::no_return, "neighbouring orbits also hit the singular point");
  ev.tau = 0.5 * (plus.tau + minus.tau);
  ev.exit_x = 0.5 * (plus.exit_x + minus.exit_x);
  ev.exit_y = 0.5 * (plus.exit_y + minus.exit_y);
  ev.exit_theta = std::atan2(ev.exit_y, ev.exit_x);
  ev.steps = plus.steps + minus.steps;
  ev.averaged = true;
  return ev;
}

SeparatrixEstimate separatrix_return_time(double eta, double tol) {
  SeparatrixEstimate out;
  for (double e : {eta, eta / 2, eta / 4}) {
    // Point of the circle |z| = e on the level H = 1/2, leaving towards -pi/4.
    double lo = -std::numbers::pi / 4 - 0.5, hi = -std::numbers::pi / 4 + 0.5;
    auto level = [&](double phi) { return hamiltonian(e * std::cos(phi), e * std::sin(phi)) - 0.5; };
    const bool lo_positive = level(lo) > 0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((level(mid) > 0) == lo_positive) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double phi = 0.5 * (lo + hi);
    IntegrateOptions opts;
    opts.tol = tol;
    opts.record = false;
    const double e2 = e * e;
    opts.event = [e2](const PlanarState& s) { return e2 - (s.x * s.x + s.y * s.y); };
    auto res = integrate(PlanarSystem::singular, {e * std::cos(phi), e * std::sin(phi), 0.0},
                         std::numeric_limits<double>::infinity(), opts);
    if (!res.event_fired)
      throw Error(ErrorKind::no_return, "separatrix shadow did not return");
    out.eta.push_back(e);
    out.tau.push_back(res.end.t);
  }
  const auto& t = out.tau;
  out.richardson = {(4 * t[1] - t[0]) / 3, (4 * t[2] - t[1]) / 3};
  out.tau0 = out.richardson[1];
  out.error = std::abs(out.richardson[1] - out.richardson[0]);
  out.monotone = (t[0] < t[1] && t[1] < t[2]) || (t[0] > t[1] && t[1] > t[2]);
  out.shrinking = std::abs(t[2] - t[1]) < std::abs(t[1] - t[0]);
  return out;
}

LinearSectionMap linear_section_map(const Rotation& rot) {
  return {rot.step(), rot.alpha()};
}

}  // namespace mildmix
