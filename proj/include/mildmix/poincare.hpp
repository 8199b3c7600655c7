#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mildmix/arithmetic.hpp"

namespace mildmix {

/// singular:   dz/dt = i (z - 1) / z
/// normalized: dz/dt = 1 / z
/// Both are F = g / |z|^2 with a polynomial g, which is what the integrator
/// uses close to the origin.
enum class PlanarSystem { singular, normalized };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// (-y / r^2, (x (x - 1) + y^2) / r^2). Throws singularity at the origin.
Vec2 field_singular(double x, double y);
/// Field of either system. Throws singularity at the origin.
Vec2 field(PlanarSystem sys, double x, double y);
/// g = |z|^2 F, defined everywhere.
Vec2 rescaled_field(PlanarSystem sys, double x, double y);

/// H = e^{2x} (y^2 + (x - 1)^2) / 2, a first integral of the singular system.
double hamiltonian(double x, double y);
Vec2 hamiltonian_gradient(double x, double y);
/// H_x F_x + H_y F_y for the singular system.
double hamiltonian_rate(double x, double y);
/// e^{2x} (x^2 + y^2).
double invariant_density(double x, double y);
/// div(rho F) for the singular system, by complex-step differentiation.
double density_divergence(double x, double y);

struct PlanarState {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;  ///< physical time
};

struct TrajectoryPoint {
  double t, x, y, H;
};

struct IntegrateOptions {
  enum class Mode { automatic, direct, rescaled };

  double tol = 1e-9;
  double r_switch = 0.05;
  Mode mode = Mode::automatic;
  std::int64_t max_steps = 5'000'000;
  bool record = true;
  /// Optional stopping surface: integration ends where this function crosses
  /// from negative to non-negative.
  std::function<double(const PlanarState&)> event;
  /// Trajectories closer than this to the origin are reported as captured.
  double capture_radius = 1e-10;
};

struct IntegrateResult {
  PlanarState end;
  std::vector<TrajectoryPoint> trajectory;  ///< accepted step endpoints
  bool reached_time = false;
  bool event_fired = false;
  bool captured = false;
  std::int64_t steps = 0;
  std::int64_t rejected = 0;
};

/// Adaptive Dormand-Prince 5(4) integration over physical time T (either
/// sign; nullopt runs until the event, capture or max_steps). With
/// Mode::automatic the time-rescaled field g is used inside |z| < r_switch.
/// Errors: singularity (start at the origin), step_failure.
IntegrateResult integrate(PlanarSystem sys, PlanarState start, std::optional<double> T,
                          const IntegrateOptions& opts = {});

/// -r^2 cos(2 theta).
double first_return_closed(double r, double theta);

struct ReturnEvent {
  double r = 0.0;
  double theta = 0.0;        ///< entry angle
  double tau = 0.0;          ///< signed return time
  double exit_theta = 0.0;
  double exit_x = 0.0;
  double exit_y = 0.0;
  bool averaged = false;     ///< orbit hits the origin; tau averages theta +- h
  std::int64_t steps = 0;
};

/// First return to |z| = r moving inside the circle, forward or backward in
/// time according to the radial velocity at the start.
/// Errors: no_return (tangential start), step_failure.
ReturnEvent first_return_numeric(PlanarSystem sys, double r, double theta, double tol = 1e-10);

struct SeparatrixEstimate {
  double tau0 = 0.0;
  double error = 0.0;
  std::vector<double> eta;
  std::vector<double> tau;         ///< circle-to-circle time at each eta
  std::vector<double> richardson;  ///< (4 tau(eta/2) - tau(eta)) / 3
  bool monotone = false;
  bool shrinking = false;          ///< successive differences shrink
};

/// Time along the loop H = 1/2 from the origin back to itself, from shadowing
/// runs between the circles |z| = eta, eta/2, eta/4 and Richardson
/// extrapolation in eta^2.
SeparatrixEstimate separatrix_return_time(double eta = 0.02, double tol = 1e-12);

/// The linear flow (x1 + t alpha, x2 + t) on the torus and its section x2 = 0.
struct LinearSectionMap {
  CirclePoint step;
  double alpha = 0.0;
  double return_time(CirclePoint) const { return 1.0; }
  CirclePoint map(CirclePoint x) const { return x + step; }
};

LinearSectionMap linear_section_map(const Rotation& rot);

}  // namespace mildmix
