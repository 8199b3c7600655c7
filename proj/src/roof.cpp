#include "mildmix/roof.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mildmix/errors.hpp"

namespace mildmix {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kPieceSamples = 512;
constexpr int kCriticalCells = 1024;

[[noreturn]] void schema(const std::string& what) {
  throw Error(ErrorKind::schema_violation, what);
}

double poly_value(const std::vector<double>& c, double u) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * u + *it;
  return v;
}

double poly_derivative(const std::vector<double>& c, double u) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) v = v * u + static_cast<double>(k) * c[k];
  return v;
}

/// Variation of sin over the phase interval [a, b].
double sin_variation(double a, double b) {
  if (a > b) std::swap(a, b);
  double total = 0.0;
  double prev = std::sin(a);
  // critical points pi/2 + k*pi strictly inside (a, b)
  double k = std::floor((a - std::numbers::pi / 2) / std::numbers::pi) + 1;
  for (double c = std::numbers::pi / 2 + k * std::numbers::pi; c < b;
       c += std::numbers::pi) {
    double v = std::sin(c);
    total += std::abs(v - prev);
    prev = v;
  }
  return total + std::abs(std::sin(b) - prev);
}

}  // namespace

double AcSegment::value(double x) const {
  if (kind == Kind::poly) return poly_value(params, x - lo);
  return params[0] * std::sin(kTwoPi * params[1] * x + params[2]);
}

double AcSegment::derivative(double x) const {
  if (kind == Kind::poly) return poly_derivative(params, x - lo);
  return params[0] * kTwoPi * params[1] * std::cos(kTwoPi * params[1] * x + params[2]);
}

double AcSegment::integral() const {
  const double len = hi - lo;
  if (kind == Kind::poly) {
    double total = 0.0;
    double power = len;
    for (std::size_t k = 0; k < params.size(); ++k) {
      total += params[k] * power / static_cast<double>(k + 1);
      power *= len;
    }
    return total;
  }
  const double amp = params[0], freq = params[1], phase = params[2];
  if (freq == 0.0) return amp * std::sin(phase) * len;
  return -amp / (kTwoPi * freq) *
         (std::cos(kTwoPi * freq * hi + phase) - std::cos(kTwoPi * freq * lo + phase));
}

double AcSegment::derivative_bound() const {
  if (kind == Kind::trig) return std::abs(params[0] * kTwoPi * params[1]);
  const double len = hi - lo;
  double bound = 0.0;
  double power = 1.0;
  for (std::size_t k = 1; k < params.size(); ++k) {
    bound += static_cast<double>(k) * std::abs(params[k]) * power;
    power *= len;
  }
  return bound;
}

double AcSegment::variation(double a, double b) const {
  if (kind == Kind::trig) {
    return std::abs(params[0]) * sin_variation(kTwoPi * params[1] * a + params[2],
                                               kTwoPi * params[1] * b + params[2]);
  }
  // Split at sign changes of the derivative; the polynomial is monotone
  // between consecutive critical points.
  std::vector<double> stops{a};
  const double h = (b - a) / kCriticalCells;
  double left = a;
  double dl = derivative(left);
  for (int i = 1; i <= kCriticalCells; ++i) {
    double right = i == kCriticalCells ? b : a + h * i;
    double dr = derivative(right);
    if ((dl < 0 && dr > 0) || (dl > 0 && dr < 0)) {
      double lo_x = left, hi_x = right, lo_d = dl;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo_x + hi_x);
        double dm = derivative(mid);
        if ((dm < 0) == (lo_d < 0)) {
          lo_x = mid;
          lo_d = dm;
        } else {
          hi_x = mid;
        }
      }
      stops.push_back(0.5 * (lo_x + hi_x));
    }
    left = right;
    dl = dr;
  }
  stops.push_back(b);
  double total = 0.0;
  for (std::size_t i = 1; i < stops.size(); ++i)
    total += std::abs(value(stops[i]) - value(stops[i - 1]));
  return total;
}

RoofFunction::RoofFunction(std::vector<double> breakpoints, std::vector<double> jumps,
                           double constant, std::vector<AcSegment> segments)
    : constant_(constant), segments_(std::move(segments)) {
  if (breakpoints.size() != jumps.size())
    schema("breakpoints and jumps must have the same length");
  if (!std::isfinite(constant)) schema("constant must be finite");
  std::vector<std::pair<CirclePoint, double>> merged;
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] >= 0.0 && breakpoints[i] < 1.0))
      schema("breakpoints must lie in [0, 1)");
    if (!std::isfinite(jumps[i])) schema("jumps must be finite");
    merged.emplace_back(CirclePoint::from_double(breakpoints[i]), jumps[i]);
  }
  std::sort(merged.begin(), merged.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [point, jump] : merged) {
    if (!breakpoints_.empty() && breakpoints_.back() == point) {
      jumps_.back() += jump;
    } else {
      breakpoints_.push_back(point);
      jumps_.push_back(jump);
    }
  }
  for (std::size_t i = jumps_.size(); i-- > 0;) {
    if (jumps_[i] == 0.0) {
      jumps_.erase(jumps_.begin() + static_cast<std::ptrdiff_t>(i));
      breakpoints_.erase(breakpoints_.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  for (double d : jumps_) jump_sum_ += d;

  for (const auto& seg : segments_) {
    if (!(seg.lo >= 0.0 && seg.lo < seg.hi && seg.hi <= 1.0))
      schema("segment domain must satisfy 0 <= lo < hi <= 1");
    if (seg.kind == AcSegment::Kind::trig && seg.params.size() != 3)
      schema("trig segment needs [amplitude, frequency, phase]");
    if (seg.kind == AcSegment::Kind::poly && seg.params.empty())
      schema("poly segment needs at least one coefficient");
    for (double p : seg.params)
      if (!std::isfinite(p)) schema("segment parameters must be finite");
  }
  validate_continuity();
  bounds_ = compute_bounds();
}

RoofFunction RoofFunction::canonical() { return RoofFunction({0.0}, {1.0}, 1.0); }

RoofFunction RoofFunction::constant_roof(double value) {
  return RoofFunction({}, {}, value);
}

double RoofFunction::pl_value(CirclePoint x) const {
  double v = constant_;
  for (std::size_t i = 0; i < jumps_.size(); ++i)
    v += jumps_[i] * (x - breakpoints_[i]).to_double();
  return v;
}

double RoofFunction::ac_value(double x) const {
  double v = 0.0;
  for (const auto& seg : segments_)
    if (seg.covers(x)) v += seg.value(x);
  return v;
}

double RoofFunction::ac_left(double x) const {
  if (x == 0.0) x = 1.0;
  double v = 0.0;
  for (const auto& seg : segments_)
    if (seg.lo < x && x <= seg.hi) v += seg.value(x);
  return v;
}

double RoofFunction::left_limit(CirclePoint x) const {
  double v = constant_;
  for (std::size_t i = 0; i < jumps_.size(); ++i) {
    CirclePoint r = x - breakpoints_[i];
    v += jumps_[i] * (r.raw() == 0 ? 1.0 : r.to_double());
  }
  return v + ac_left(x.to_double());
}

void RoofFunction::validate_continuity() const {
  for (const auto& seg : segments_) {
    for (double e : {seg.lo, seg.hi}) {
      double at = e >= 1.0 ? 0.0 : e;
      double right = ac_value(at);
      double left = ac_left(at);
      double scale = 1.0 + std::abs(right) + std::abs(left);
      if (std::abs(right - left) > 1e-10 * scale)
        schema("absolutely continuous part is discontinuous at " + std::to_string(e));
    }
  }
}

double RoofFunction::mean() const {
  double m = constant_ + 0.5 * jump_sum_;
  for (const auto& seg : segments_) m += seg.integral();
  return m;
}

std::pair<RoofFunction, RoofFunction> RoofFunction::decompose() const {
  double ac_mean = 0.0;
  for (const auto& seg : segments_) ac_mean += seg.integral();
  std::vector<double> points;
  for (auto b : breakpoints_) points.push_back(b.to_double());
  RoofFunction pl(points, jumps_, constant_ + ac_mean);
  pl.breakpoints_ = breakpoints_;  // keep the exact lattice points
  RoofFunction ac({}, {}, -ac_mean, segments_);
  return {std::move(pl), std::move(ac)};
}

RoofBounds RoofFunction::compute_bounds() const {
  std::vector<double> knots{0.0, 1.0};
  for (auto b : breakpoints_) knots.push_back(b.to_double());
  for (const auto& seg : segments_) {
    knots.push_back(seg.lo);
    knots.push_back(seg.hi);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  RoofBounds out;
  out.lower = INFINITY;
  out.upper = -INFINITY;
  for (std::size_t i = 0; i < jumps_.size(); ++i)
    if (breakpoints_[i].raw() != 0) out.variation += std::abs(jumps_[i]);

  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double u = knots[k], v = knots[k + 1];
    if (!(v > u)) continue;
    // The piecewise-linear part is affine with slope S on (u, v); anchor it
    // at the midpoint, away from any breakpoint.
    const double mid = 0.5 * (u + v);
    const double pl_mid = pl_value(CirclePoint::from_double(mid));
    auto pl_at = [&](double x) { return pl_mid + jump_sum_ * (x - mid); };
    std::vector<const AcSegment*> active;
    for (const auto& seg : segments_)
      if (seg.lo <= u && v <= seg.hi) active.push_back(&seg);
    auto g_at = [&](double x) {
      double g = 0.0;
      for (const auto* seg : active) g += seg->value(x);
      return g;
    };

    out.variation += std::abs(jump_sum_) * (v - u);
    for (const auto* seg : active) out.variation += seg->variation(u, v);

    if (active.empty()) {
      double a = pl_at(u), b = pl_at(v);
      out.lower = std::min({out.lower, a, b});
      out.upper = std::max({out.upper, a, b});
      continue;
    }
    double lipschitz = std::abs(jump_sum_);
    for (const auto* seg : active) lipschitz += seg->derivative_bound();
    const double h = (v - u) / kPieceSamples;
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i <= kPieceSamples; ++i) {
      double x = i == kPieceSamples ? v : u + h * i;
      double val = pl_at(x) + g_at(x);
      lo = std::min(lo, val);
      hi = std::max(hi, val);
    }
    out.lower = std::min(out.lower, lo - 0.5 * lipschitz * h);
    out.upper = std::max(out.upper, hi + 0.5 * lipschitz * h);
  }
  return out;
}

RoofBounds RoofFunction::bounds() const {
  if (!(bounds_.lower > 0.0))
    throw Error(ErrorKind::positivity_violation,
                "roof is not bounded away from zero (certified lower bound " +
                    std::to_string(bounds_.lower) + ")");
  return bounds_;
}

RoofFunction RoofFunction::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) schema("roof spec must be a JSON object");
    auto breakpoints = j.value("breakpoints", std::vector<double>{});
    auto jumps = j.value("jumps", std::vector<double>{});
    double constant = j.at("constant").get<double>();
    std::vector<AcSegment> segments;
    if (j.contains("ac_segments")) {
      for (const auto& s : j.at("ac_segments")) {
        AcSegment seg;
        auto kind = s.at("kind").get<std::string>();
        if (kind == "poly") {
          seg.kind = AcSegment::Kind::poly;
        } else if (kind == "trig") {
          seg.kind = AcSegment::Kind::trig;
        } else {
          schema("unknown segment kind '" + kind + "'");
        }
        seg.params = s.at("params").get<std::vector<double>>();
        if (s.contains("domain")) {
          auto dom = s.at("domain").get<std::vector<double>>();
          if (dom.size() != 2) schema("segment domain must be [lo, hi]");
          seg.lo = dom[0];
          seg.hi = dom[1];
        }
        segments.push_back(std::move(seg));
      }
    }
    return RoofFunction(std::move(breakpoints), std::move(jumps), constant,
                        std::move(segments));
  } catch (const nlohmann::json::exception& e) {
    schema(std::string("roof spec: ") + e.what());
  }
}

nlohmann::json RoofFunction::to_json() const {
  std::vector<double> points;
  for (auto b : breakpoints_) points.push_back(b.to_double());
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : segments_) {
    segs.push_back({{"kind", s.kind == AcSegment::Kind::poly ? "poly" : "trig"},
                    {"params", s.params},
                    {"domain", {s.lo, s.hi}}});
  }
  return {{"breakpoints", points},
          {"jumps", jumps_},
          {"constant", constant_},
          {"ac_segments", segs}};
}

}  // namespace mildmix
