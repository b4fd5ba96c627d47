#include "curveflow/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "curveflow/errors.hpp"

namespace curveflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RadialNode {
  double du = 0.0;
  double d2u = 0.0;
  double w = 1.0;
  RadialCurvatures kappa;
  double F = 0.0;
  double Phi = 0.0;
  double speed = 0.0;
  double f_rad = 0.0;
  double f_tan = 0.0;
};

double value_at(const RadialConfig& config, const RadialState& s, int j) {
  const int n = static_cast<int>(s.u.size());
  if (j < 0) return s.u[static_cast<std::size_t>(-j - 1)];
  if (j < n) return s.u[static_cast<std::size_t>(j)];
  const std::array<double, 2> xb{config.R, 0.0};
  return s.u[static_cast<std::size_t>(n - 2)] + 2.0 * s.h * config.forcing.phi(xb, s.u[static_cast<std::size_t>(n - 1)]);
}

// Returns the first node off the cone, or -1.
int evaluate(const RadialConfig& config, const RadialState& s, std::vector<RadialNode>& out) {
  const int n = static_cast<int>(s.u.size());
  const int dim = config.f.dim();
  out.resize(static_cast<std::size_t>(n));
  SmallVector lambda(dim);
  for (int j = 0; j < n; ++j) {
    RadialNode& node = out[static_cast<std::size_t>(j)];
    const double um = value_at(config, s, j - 1);
    const double u0 = s.u[static_cast<std::size_t>(j)];
    const double up = value_at(config, s, j + 1);
    node.du = (up - um) / (2.0 * s.h);
    node.d2u = (up - 2.0 * u0 + um) / (s.h * s.h);
    node.w = std::sqrt(1.0 + node.du * node.du);
    node.kappa = radial_curvatures(s.radius(j), node.du, node.d2u);
    lambda[0] = node.kappa.radial;
    for (int k = 1; k < dim; ++k) lambda[k] = node.kappa.tangential;
    if (!ConeVector::admissible(lambda.span())) return j;
    const CurvatureEvaluation ev = config.f.evaluate(ConeVector(lambda));
    const std::array<double, 2> x{s.radius(j), 0.0};
    node.F = ev.value;
    node.Phi = config.forcing.Phi(x, u0);
    node.speed = node.w * (node.F - node.Phi);
    node.f_rad = ev.gradient[0];
    node.f_tan = dim > 1 ? ev.gradient[1] : 0.0;
  }
  return -1;
}

MonitorRecord radial_monitors(const RadialState& s, const std::vector<RadialNode>& nodes, double dt, double a) {
  MonitorRecord r;
  r.t = s.t;
  r.dt = dt;
  r.min_speed = kInf;
  r.max_speed = -kInf;
  r.min_kappa = kInf;
  r.max_kappa = -kInf;
  r.nu_vert_min = kInf;
  const int n = static_cast<int>(nodes.size());
  for (int j = 0; j < n; ++j) {
    const RadialNode& node = nodes[static_cast<std::size_t>(j)];
    r.min_speed = std::min(r.min_speed, node.speed);
    r.max_speed = std::max(r.max_speed, node.speed);
    const double kmin = std::min(node.kappa.radial, node.kappa.tangential);
    const double kmax = std::max(node.kappa.radial, node.kappa.tangential);
    r.min_kappa = std::min(r.min_kappa, kmin);
    r.max_kappa = std::max(r.max_kappa, kmax);
    r.nu_vert_min = std::min(r.nu_vert_min, 1.0 / node.w);
    r.residual = std::max(r.residual, std::abs(node.F - node.Phi));
    if (j == n - 1) {
      r.max_grad_boundary = std::abs(node.du);
    } else {
      r.max_grad_interior = std::max(r.max_grad_interior, std::abs(node.du));
      const double denom = 1.0 / node.w - a;
      r.interior_ratio = std::max(r.interior_ratio, denom > 0.0 ? kmax / denom : kInf);
    }
  }
  r.max_abs_speed = std::max(std::abs(r.min_speed), std::abs(r.max_speed));
  const auto& u = s.u;
  const auto b = static_cast<std::size_t>(n - 1);
  r.max_unn = (2.0 * u[b] - 5.0 * u[b - 1] + 4.0 * u[b - 2] - u[b - 3]) / (s.h * s.h);
  r.max_utn = 0.0;
  r.barrier_min = std::numeric_limits<double>::quiet_NaN();
  return r;
}

double stable_dt_from(const RadialConfig& config, const RadialState& s, const std::vector<RadialNode>& nodes) {
  const double dim = config.f.dim();
  double dt = kInf;
  for (const RadialNode& node : nodes) {
    const double w = node.w;
    const double g = std::max(node.f_rad / (w * w * w), node.f_tan / w);
    dt = std::min(dt, s.h * s.h / (2.0 * dim * w * g));
  }
  return config.sigma * dt;
}

}  // namespace

RadialCurvatures radial_curvatures(double r, double du, double d2u) {
  if (r < 0.0) throw UsageError("radius must be non-negative");
  const double w = std::sqrt(1.0 + du * du);
  if (r == 0.0) return {d2u, d2u};
  return {d2u / (w * w * w), du / (r * w)};
}

std::vector<double> radial_speed(const RadialConfig& config, const RadialState& state) {
  std::vector<RadialNode> nodes;
  if (const int bad = evaluate(config, state, nodes); bad >= 0) {
    throw FlowBreakdown("radial profile is not strictly convex at node " + std::to_string(bad), bad, {});
  }
  std::vector<double> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.speed);
  return out;
}

double radial_stable_dt(const RadialConfig& config, const RadialState& state) {
  std::vector<RadialNode> nodes;
  if (const int bad = evaluate(config, state, nodes); bad >= 0) {
    throw FlowBreakdown("radial profile is not strictly convex at node " + std::to_string(bad), bad, {});
  }
  return stable_dt_from(config, state, nodes);
}

RadialResult run_radial_flow(const RadialConfig& config) {
  if (config.points < 4) throw ConfigError("radial oracle needs at least 4 points");
  if (!(config.R > 0.0)) throw ConfigError("radial oracle needs R > 0");
  if (!config.initial) throw ConfigError("radial oracle needs an initial profile");
  if (!(config.sigma > 0.0) || config.sigma > 1.0) throw ConfigError("sigma must lie in (0, 1]");

  RadialState s;
  s.h = config.R / (config.points - 0.5);
  s.u.resize(static_cast<std::size_t>(config.points));
  for (int j = 0; j < config.points; ++j) s.u[static_cast<std::size_t>(j)] = config.initial(s.radius(j));

  std::vector<RadialNode> nodes;
  if (const int bad = evaluate(config, s, nodes); bad >= 0) {
    std::ostringstream msg;
    msg << "initial radial profile is not strictly convex at node " << bad << " (r=" << s.radius(bad) << ")";
    throw FlowBreakdown(msg.str(), bad, {});
  }
  double nu_min = kInf;
  for (const auto& n : nodes) nu_min = std::min(nu_min, 1.0 / n.w);
  const double a = 0.5 * nu_min;

  RadialResult res;
  res.records.push_back(radial_monitors(s, nodes, 0.0, a));
  const MonitorRecord& r0 = res.records.front();
  const double lo = std::min(r0.min_speed, 0.0);
  const double hi = std::max(r0.max_speed, 0.0);
  const double eps = 1e-8 * (1.0 + r0.max_abs_speed);
  res.min_increment = kInf;

  std::vector<double> outputs = config.output_times;
  std::sort(outputs.begin(), outputs.end());
  std::size_t next_output = 0;
  while (next_output < outputs.size() && outputs[next_output] <= 0.0) {
    res.snapshots.push_back(s);
    ++next_output;
  }
  const double t_end = outputs.empty() ? config.t_max : std::max(config.t_max, outputs.back());
  int below = (config.tol_res > 0.0 && r0.residual < config.tol_res) ? 1 : 0;

  std::vector<RadialNode> next_nodes;
  while (s.t < t_end && res.steps < config.max_steps && below < 2) {
    double dt = stable_dt_from(config, s, nodes);
    bool landing = false;
    if (next_output < outputs.size() && s.t + dt >= outputs[next_output]) {
      dt = outputs[next_output] - s.t;
      landing = true;
    }
    RadialState trial;
    int bad = -1;
    bool accepted = false;
    for (int attempt = 0; attempt <= 8; ++attempt, dt *= 0.5, landing = false) {
      trial = s;
      for (std::size_t j = 0; j < s.u.size(); ++j) trial.u[j] += dt * nodes[j].speed;
      trial.t = s.t + dt;
      bad = evaluate(config, trial, next_nodes);
      if (bad < 0) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "radial step from t=" << s.t << " left the cone at node " << bad;
      throw FlowBreakdown(msg.str(), bad, {});
    }
    if (landing) trial.t = outputs[next_output];
    for (std::size_t j = 0; j < s.u.size(); ++j) res.min_increment = std::min(res.min_increment, trial.u[j] - s.u[j]);
    if (res.min_increment < -1e-10) res.monotone = false;
    s = std::move(trial);
    std::swap(nodes, next_nodes);
    ++res.steps;
    if (landing) {
      res.snapshots.push_back(s);
      ++next_output;
    }
    if (res.steps % config.monitor_every == 0 || landing) {
      MonitorRecord rec = radial_monitors(s, nodes, dt, a);
      if (std::max(lo - rec.min_speed, rec.max_speed - hi) > eps) res.speed_bounds_held = false;
      if (!(rec.min_kappa > 0.0)) res.convexity_held = false;
      if (config.tol_res > 0.0) below = rec.residual < config.tol_res ? below + 1 : 0;
      res.records.push_back(rec);
    }
  }
  if (res.min_increment == kInf) res.min_increment = 0.0;
  res.converged = below >= 2;
  res.final_state = std::move(s);
  return res;
}

double radial_interpolate(const RadialState& state, double r) {
  const int n = static_cast<int>(state.u.size());
  r = std::abs(r);
  const double pos = r / state.h - 0.5;  // fractional node index
  int j0 = static_cast<int>(std::floor(pos)) - 1;
  j0 = std::min(j0, n - 4);
  double value = 0.0;
  for (int a = 0; a < 4; ++a) {
    double weight = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (b != a) weight *= (pos - (j0 + b)) / static_cast<double>(a - b);
    }
    const int j = j0 + a;
    value += weight * state.u[static_cast<std::size_t>(j < 0 ? -j - 1 : j)];
  }
  return value;
}

ScalarField lift_to_grid(const RadialState& state, const Grid& grid) {
  if (grid.domain().kind() != DomainKind::kDisk) throw UsageError("lift_to_grid needs a disk domain");
  ScalarField field;
  field.t = state.t;
  field.values.resize(static_cast<std::size_t>(grid.node_count()));
  for (int p = 0; p < grid.node_count(); ++p) {
    const Vec2& x = grid.position(p);
    field.values[static_cast<std::size_t>(p)] = radial_interpolate(state, std::hypot(x[0], x[1]));
  }
  return field;
}

OracleComparison compare_with_radial(const FlowConfig& flow, double dt_2d, int radial_points,
                                     const std::vector<double>& times) {
  if (flow.domain.kind != DomainKind::kDisk) throw UsageError("the radial oracle needs a disk domain");
  if (!flow.initial.value) throw UsageError("the radial oracle needs analytic initial data");
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());

  RadialConfig rc;
  rc.R = flow.domain.a;
  rc.points = radial_points;
  rc.f = flow.f;
  rc.forcing = flow.forcing;
  auto u0 = flow.initial.value;
  rc.initial = [u0](double r) { return u0(r, 0.0); };
  rc.output_times = sorted;
  rc.t_max = sorted.empty() ? 0.0 : sorted.back();
  rc.monitor_every = 1000;
  const RadialResult radial = run_radial_flow(rc);

  FlowConfig cfg = flow;
  cfg.scheme = TimeScheme::kImplicit;
  cfg.dt_initial = dt_2d;
  cfg.dt_growth = 1.0;
  cfg.dt_max = dt_2d;
  FlowEngine engine(cfg);
  FlowState state = engine.initial_state();

  OracleComparison out;
  out.radial_h = radial.final_state.h;
  out.dt_2d = dt_2d;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double target = sorted[k];
    while (state.u.t < target - 1e-12 * std::max(1.0, target)) {
      state = engine.step(state, std::min(dt_2d, target - state.u.t));
    }
    const ScalarField lifted = lift_to_grid(radial.snapshots[k], engine.grid());
    double diff = 0.0;
    for (int p = 0; p < engine.grid().unknown_count(); ++p) {
      const auto pi = static_cast<std::size_t>(p);
      diff = std::max(diff, std::abs(state.u.values[pi] - lifted.values[pi]));
    }
    out.times.push_back(target);
    out.sup_difference.push_back(diff);
  }
  return out;
}

}  // namespace curveflow
