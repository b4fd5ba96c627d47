#pragma once

#include <functional>
#include <vector>

#include "curveflow/flow.hpp"
#include "curveflow/geometry.hpp"
#include "curveflow/grid.hpp"
#include "curveflow/symfunc.hpp"

namespace curveflow {

/// Principal curvatures of a radial graph u(|x|): kappa_rad = u''/w^3 and
/// kappa_tan = u'/(r w), the latter with multiplicity n - 1. At r = 0 both
/// equal u''(0).
struct RadialCurvatures {
  double radial = 0.0;
  double tangential = 0.0;
};

RadialCurvatures radial_curvatures(double r, double du, double d2u);

/// Radial profile on the staggered grid r_j = (j + 1/2) h, h = R/(N - 1/2),
/// so the last node sits on r = R.
struct RadialState {
  std::vector<double> u;
  double h = 0.0;
  double t = 0.0;

  double radius(int j) const { return (j + 0.5) * h; }
};

struct RadialConfig {
  double R = 1.0;
  int points = 256;
  /// Any dimension n >= 1.
  CurvatureFunction f = CurvatureFunction::combined(2, 1);
  /// Phi and phi are evaluated at x = (r, 0, ...).
  ForcingSpec forcing;
  std::function<double(double r)> initial;
  double sigma = 0.9;
  /// Stop once sup |F - Phi| < tol_res on two consecutive samples (0 disables).
  double tol_res = 0.0;
  double t_max = 1.0;
  long max_steps = 50'000'000;
  int monitor_every = 100;
  /// Profiles are stored at these times (the step is shortened to land on them).
  std::vector<double> output_times;
};

struct RadialResult {
  RadialState final_state;
  std::vector<RadialState> snapshots;
  std::vector<MonitorRecord> records;
  long steps = 0;
  bool converged = false;
  bool monotone = true;
  double min_increment = 0.0;
  bool speed_bounds_held = true;
  bool convexity_held = true;
};

/// Explicit Euler on the radial reduction with mirror symmetry at r = 0 and the
/// ghost u_N = u_{N-2} + 2 h phi(R, u_{N-1}). Throws FlowBreakdown when a step
/// cannot be kept in the cone with eight halvings.
RadialResult run_radial_flow(const RadialConfig& config);

/// Speed w (f(kappa) - Phi) at every radial node.
std::vector<double> radial_speed(const RadialConfig& config, const RadialState& state);

/// Stable explicit step sigma h^2 / (2 n w max G) for the radial operator.
double radial_stable_dt(const RadialConfig& config, const RadialState& state);

/// Four-point cubic interpolation of the profile at radius r (even extension
/// through r = 0, one-sided stencil at the rim).
double radial_interpolate(const RadialState& state, double r);

/// u_2d(x) = u(|x|) at every grid node. Throws UsageError for a non-disk domain.
ScalarField lift_to_grid(const RadialState& state, const Grid& grid);

/// 2-D engine versus lifted radial oracle at matched times.
struct OracleComparison {
  std::vector<double> times;
  std::vector<double> sup_difference;
  double radial_h = 0.0;
  double dt_2d = 0.0;
};

/// Runs the 2-D flow of `flow` (disk domain, radially symmetric data) with a
/// fixed implicit step dt_2d and the radial oracle with `radial_points` nodes,
/// and compares both at each of `times`.
OracleComparison compare_with_radial(const FlowConfig& flow, double dt_2d, int radial_points,
                                     const std::vector<double>& times);

}  // namespace curveflow
