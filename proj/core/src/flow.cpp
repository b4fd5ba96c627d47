#include "curveflow/flow.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "curveflow/errors.hpp"
#include "parallel.hpp"

namespace curveflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxHalvings = 8;
constexpr double kMonotoneTol = 1e-10;
constexpr double kGradientTol = 1e-10;
constexpr double kBarrierTol = 1e-8;

struct BoundarySecondDerivatives {
  double max_unn = -kInf;
  double max_utn = 0.0;
};

BoundarySecondDerivatives boundary_second_derivatives(const Grid& grid, const ScalarField& u) {
  BoundarySecondDerivatives out;
  for (int i = 0; i < grid.n_theta(); ++i) {
    const NodeDerivatives d = grid.one_sided_derivatives(u.span(), i);
    const Vec2& nu = grid.boundary_normal(i);
    const Vec2 tau{-nu[1], nu[0]};
    const double hnn = d.d2u[0] * nu[0] * nu[0] + 2.0 * d.d2u[1] * nu[0] * nu[1] + d.d2u[2] * nu[1] * nu[1];
    const double htn = d.d2u[0] * tau[0] * nu[0] + d.d2u[1] * (tau[0] * nu[1] + tau[1] * nu[0]) +
                       d.d2u[2] * tau[1] * nu[1];
    out.max_unn = std::max(out.max_unn, hnn);
    out.max_utn = std::max(out.max_utn, std::abs(htn));
  }
  return out;
}

std::string describe_node(const Grid& grid, int node, const std::vector<double>& spectrum) {
  std::ostringstream msg;
  const Vec2& x = grid.position(node);
  msg << "node " << node << " (ring " << grid.ring(node) << ", ray " << grid.ray(node) << ", x=(" << x[0] << ", "
      << x[1] << "))";
  if (!spectrum.empty()) {
    msg << " with principal curvatures (";
    for (std::size_t k = 0; k < spectrum.size(); ++k) msg << (k ? ", " : "") << spectrum[k];
    msg << ")";
  }
  return msg.str();
}

std::vector<double> node_spectrum(const Grid& grid, const ScalarField& u, int node) {
  const NodeDerivatives d = grid.derivatives(u.span(), node);
  const SymmetricEigen eig = principal_curvatures(curvature_matrix(d.gradient(), d.hessian()));
  return {eig.values[0], eig.values[1]};
}

// Three-point derivative weights at the middle of (t0, t1, t2).
std::array<double, 3> middle_derivative_weights(double t0, double t1, double t2) {
  const double h1 = t1 - t0;
  const double h2 = t2 - t1;
  return {-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))};
}

}  // namespace

std::string to_string(TimeScheme scheme) { return scheme == TimeScheme::kExplicit ? "explicit" : "implicit"; }

TimeScheme scheme_from_name(const std::string& name) {
  if (name == "explicit") return TimeScheme::kExplicit;
  if (name == "implicit") return TimeScheme::kImplicit;
  throw ConfigError("unknown time scheme '" + name + "' (expected explicit or implicit)");
}

int resolve_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("CURVEFLOW_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

void FlowConfig::validate() const {
  if (!(sigma > 0.0) || sigma > 1.0) throw ConfigError("dt safety factor sigma must lie in (0, 1]");
  if (!(tol_res > 0.0)) throw ConfigError("residual tolerance must be positive");
  if (!(window_dt > 0.0)) throw ConfigError("window_dt must be positive");
  if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
  if (monitor_every < 1) throw ConfigError("monitor cadence must be >= 1");
  if (!(dt_initial > 0.0) || !(dt_max >= dt_initial)) throw ConfigError("implicit steps need 0 < dt_initial <= dt_max");
  if (!(dt_growth >= 1.0)) throw ConfigError("dt growth factor must be >= 1");
  if (!(compat_factor > 0.0)) throw ConfigError("compatibility factor must be positive");
  if (!forcing.Phi || !forcing.Phi_z || !forcing.phi || !forcing.phi_z) throw ConfigError("forcing is incomplete");
  if (!initial_field && !initial.value) throw ConfigError("no initial data");
  if (f.dim() != 2) throw ConfigError("the grid solver needs a curvature function with n = 2");
}

// ---------------------------------------------------------------------------
// Monitor CSV

std::string monitor_csv_header(bool radial) {
  std::string h =
      "t,dt,max_abs_speed,min_speed,max_speed,min_kappa,max_kappa,nu_vert_min,residual,"
      "max_grad_interior,max_grad_boundary,max_unn,max_utn,interior_ratio,barrier_min";
  if (radial) h += ",radial";
  return h;
}

std::string monitor_csv_row(const MonitorRecord& r, bool radial) {
  std::ostringstream out;
  out << std::setprecision(12);
  const double values[] = {r.t,         r.dt,         r.max_abs_speed,     r.min_speed,         r.max_speed,
                           r.min_kappa, r.max_kappa,  r.nu_vert_min,       r.residual,          r.max_grad_interior,
                           r.max_grad_boundary, r.max_unn, r.max_utn,     r.interior_ratio,    r.barrier_min};
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    first = false;
    if (std::isnan(v)) {
      out << "NA";
    } else {
      out << v;
    }
  }
  if (radial) out << ",1";
  return out.str();
}

void write_monitor_csv(std::ostream& out, const std::vector<MonitorRecord>& records, bool radial) {
  out << monitor_csv_header(radial) << '\n';
  for (const auto& r : records) out << monitor_csv_row(r, radial) << '\n';
}

// ---------------------------------------------------------------------------
// Reports

std::string InitialReport::to_text() const {
  std::ostringstream out;
  out << "compatibility residual  " << compat_residual << " (tolerance " << compat_tol << ", ray " << compat_ray
      << ")  " << (compatible() ? "PASS" : "FAIL") << '\n';
  out << "supersolution margin    " << supersolution_margin << "  " << (supersolution_margin >= 0.0 ? "PASS" : "FAIL")
      << '\n';
  out << "min curvature           " << min_kappa << " (node " << min_kappa_node << ")  " << (convex() ? "PASS" : "FAIL")
      << '\n';
  return out.str();
}

bool BarrierResult::q_range_ok(double tol) const {
  return q_min >= -mu + N * mu * mu - tol && q_max <= tol && dq_min >= 0.5 - tol && dq_max <= 2.0 + tol;
}

std::string IdentityReport::to_text() const {
  std::ostringstream out;
  out << "evolution identities at t=" << t_mid << " over " << nodes_checked << " nodes\n";
  out << "  metric  d/dt g_ij = -2 (F - Phi) h_ij        rel. error " << metric_error << " (fixed x: "
      << metric_error_fixed_x << ", rhs scale " << metric_rhs_scale << ")\n";
  out << "  normal  d/dt nu^3 = -g^ij (F - Phi)_i u_j    rel. error " << nu_error << " (fixed x: " << nu_error_fixed_x
      << ", rhs scale " << nu_rhs_scale << ")\n";
  return out.str();
}

std::string RunResult::to_text() const {
  std::ostringstream out;
  auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };
  const MonitorRecord& last = records.empty() ? final_state.last : records.back();
  out << "status: " << (converged ? "converged" : "timeout") << " at t=" << final_state.u.t << " after "
      << final_state.steps << " steps, residual " << last.residual << '\n';
  out << "initial data\n" << initial.to_text();
  out << "speed bounds (max principle for u_t)        " << verdict(speed_bounds_held) << "  worst excess "
      << speed_excess << '\n';
  out << "monotone in time                            " << verdict(monotone) << "  min increment " << min_increment
      << '\n';
  out << "strict convexity                            " << verdict(convexity_held) << '\n';
  out << "max |Du| attained on the boundary           " << verdict(gradient_max_on_boundary) << "  worst excess "
      << gradient_excess << '\n';
  out << "barrier P >= 0 on the collar                " << verdict(barrier_held) << "  min " << barrier_worst << '\n';
  out << "convergence (two samples below tolerance)   " << verdict(converged) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Engine

struct FlowEngine::ImplicitSolver {
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::SparseMatrix<double> matrix;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
};

FlowEngine::FlowEngine(FlowConfig config)
    : config_(std::move(config)),
      domain_(build_domain(config_.domain)),
      grid_(domain_, config_.n_rho, config_.n_theta),
      threads_(resolve_threads(config_.threads)),
      solver_(std::make_unique<ImplicitSolver>()) {
  config_.validate();
  mu_ = config_.barrier.mu > 0.0 ? config_.barrier.mu : 0.3 * domain_.reach();
  N_ = config_.barrier.N > 0.0 ? config_.barrier.N : 0.12 / mu_;
  if (config_.barrier.enabled) {
    if (N_ * mu_ > 0.125 + 1e-15) throw ConfigError("barrier constants need N mu <= 1/8");
    collar_ = omega_mu_nodes(grid_, mu_);
    collar_distance_.reserve(collar_.size());
    for (int p : collar_) collar_distance_.push_back(distance_function(domain_, grid_.position(p)));
  }
}

FlowEngine::~FlowEngine() = default;
FlowEngine::FlowEngine(FlowEngine&&) noexcept = default;
FlowEngine& FlowEngine::operator=(FlowEngine&&) noexcept = default;

int FlowEngine::evaluate(const ScalarField& u, std::vector<NodeGeometry>& out, std::vector<double>* spectrum) const {
  const int n = grid_.unknown_count();
  out.resize(static_cast<std::size_t>(n));
  std::vector<char> off_cone(static_cast<std::size_t>(n), 0);
  detail::parallel_for(n, threads_, [&](int begin, int end) {
    for (int p = begin; p < end; ++p) {
      const auto pi = static_cast<std::size_t>(p);
      const NodeDerivatives d = grid_.derivatives(u.span(), p);
      NodeGeometry& g = out[pi];
      g.du = d.du;
      g.d2u = d.d2u;
      try {
        const GraphPointData pt = evaluate_point(d.gradient(), d.hessian(), config_.f);
        const GDerivatives gd = G_derivatives(pt);
        const Vec2& x = grid_.position(p);
        const double z = u.values[pi];
        g.w = pt.w;
        g.F = pt.f_value;
        g.Phi = config_.forcing.Phi(x, z);
        g.Phi_z = config_.forcing.Phi_z(x, z);
        g.speed = g.w * (g.F - g.Phi);
        g.kappa_min = pt.kappa[0];
        g.kappa_max = pt.kappa[1];
        g.gij = {gd.gij(0, 0), gd.gij(0, 1), gd.gij(1, 1)};
        g.gs = {gd.gs[0], gd.gs[1]};
        if (!std::isfinite(g.speed)) off_cone[pi] = 1;
      } catch (const ConeViolation&) {
        off_cone[pi] = 1;
      }
    }
  });
  for (int p = 0; p < n; ++p) {
    if (off_cone[static_cast<std::size_t>(p)]) {
      if (spectrum) *spectrum = node_spectrum(grid_, u, p);
      return p;
    }
  }
  return -1;
}

std::vector<NodeGeometry> FlowEngine::evaluate_or_throw(const ScalarField& u) const {
  std::vector<NodeGeometry> geo;
  std::vector<double> spectrum;
  const int bad = evaluate(u, geo, &spectrum);
  if (bad >= 0) {
    throw FlowBreakdown("discrete graph is not strictly convex at " + describe_node(grid_, bad, spectrum), bad,
                        spectrum);
  }
  return geo;
}

void FlowEngine::finish_state(FlowState& state) const {
  const BoundarySecondDerivatives b = boundary_second_derivatives(grid_, state.u);
  state.running_M = std::max(state.running_M, b.max_unn);
  state.last = monitors(state);
}

FlowState FlowEngine::make_state(ScalarField u, double a_ratio, double running_M) const {
  FlowState state;
  state.u = std::move(u);
  state.u.values.resize(static_cast<std::size_t>(grid_.node_count()), 0.0);
  apply_neumann(grid_, state.u, config_.forcing);
  state.geometry = evaluate_or_throw(state.u);
  if (a_ratio < 0.0) {
    double nu_min = kInf;
    for (const auto& g : state.geometry) nu_min = std::min(nu_min, 1.0 / g.w);
    a_ratio = 0.5 * nu_min;
  }
  state.a_ratio = a_ratio;
  state.running_M = running_M;
  state.dt_next = config_.dt_initial;
  finish_state(state);
  return state;
}

FlowState FlowEngine::initial_state() const {
  ScalarField field = config_.initial_field ? *config_.initial_field : sample_field(grid_, config_.initial.value);
  field.t = 0.0;
  return make_state(std::move(field));
}

InitialReport FlowEngine::check_initial(const ScalarField& u0) const {
  ScalarField u = u0;
  u.values.resize(static_cast<std::size_t>(grid_.node_count()), 0.0);
  apply_neumann(grid_, u, config_.forcing);
  InitialReport report;
  const double h_phys = grid_.h_rho() * std::max(domain_.a(), domain_.b());
  report.compat_tol = config_.compat_factor * h_phys * h_phys;
  const int b = grid_.n_rho() - 1;
  for (int i = 0; i < grid_.n_theta(); ++i) {
    const int node = grid_.index(b, i);
    const NodeDerivatives d = grid_.one_sided_derivatives(u.span(), i);
    const Vec2& nu = grid_.boundary_normal(i);
    const double r = std::abs(nu[0] * d.du[0] + nu[1] * d.du[1] -
                              config_.forcing.phi(grid_.position(node), u.values[static_cast<std::size_t>(node)]));
    if (r > report.compat_residual || report.compat_ray < 0) {
      report.compat_residual = r;
      report.compat_ray = i;
    }
  }
  report.supersolution_margin = kInf;
  report.min_kappa = kInf;
  for (int p = 0; p < grid_.unknown_count(); ++p) {
    const NodeDerivatives d = grid_.derivatives(u.span(), p);
    const SmallMatrix a = curvature_matrix(d.gradient(), d.hessian());
    const SymmetricEigen eig = principal_curvatures(a);
    if (eig.values[0] < report.min_kappa) {
      report.min_kappa = eig.values[0];
      report.min_kappa_node = p;
      report.min_kappa_spectrum = {eig.values[0], eig.values[1]};
    }
    if (ConeVector::admissible(eig.values.span())) {
      const double F = config_.f.value(ConeVector(eig.values));
      const double z = u.values[static_cast<std::size_t>(p)];
      report.supersolution_margin = std::min(report.supersolution_margin, F - config_.forcing.Phi(grid_.position(p), z));
    }
  }
  if (report.min_kappa_node >= 0 && !ConeVector::admissible(report.min_kappa_spectrum)) {
    // An entry on the cone tolerance counts as non-convex.
    report.min_kappa = std::min(report.min_kappa, 0.0);
  }
  return report;
}

double FlowEngine::stable_dt(const FlowState& state) const {
  const std::vector<NodeGeometry> fresh = state.geometry.empty() ? evaluate_or_throw(state.u) : std::vector<NodeGeometry>{};
  const std::vector<NodeGeometry>& geo = state.geometry.empty() ? fresh : state.geometry;
  const double n = config_.f.dim();
  double dt = kInf;
  for (int p = 0; p < grid_.unknown_count(); ++p) {
    const NodeGeometry& g = geo[static_cast<std::size_t>(p)];
    const double mean = 0.5 * (g.gij[0] + g.gij[2]);
    const double half = 0.5 * (g.gij[0] - g.gij[2]);
    const double lmax = mean + std::sqrt(half * half + g.gij[1] * g.gij[1]);
    const double h = grid_.local_spacing(p);
    dt = std::min(dt, h * h / (2.0 * n * g.w * lmax));
  }
  return config_.sigma * dt;
}

bool FlowEngine::try_explicit(const FlowState& state, double dt, FlowState& out, int& bad_node,
                              std::vector<double>& spectrum) const {
  out.u = state.u;
  for (int p = 0; p < grid_.unknown_count(); ++p) {
    out.u.values[static_cast<std::size_t>(p)] += dt * state.geometry[static_cast<std::size_t>(p)].speed;
  }
  out.u.t = state.u.t + dt;
  apply_neumann(grid_, out.u, config_.forcing);
  bad_node = evaluate(out.u, out.geometry, &spectrum);
  return bad_node < 0;
}

bool FlowEngine::try_implicit(const FlowState& state, double dt, FlowState& out, int& bad_node,
                              std::vector<double>& spectrum) {
  const int n = grid_.unknown_count();
  auto& s = *solver_;
  s.triplets.clear();
  Eigen::VectorXd rhs(n);
  const auto& u = state.u.values;
  for (int p = 0; p < n; ++p) {
    const NodeGeometry& g = state.geometry[static_cast<std::size_t>(p)];
    rhs[p] = g.speed;
    const double psi = g.F - g.Phi;
    // d(w (G - Phi)) / d(u_x, u_y, u_xx, u_xy, u_yy); u_xy enters G twice.
    const double ax = g.du[0] / g.w * psi + g.w * g.gs[0];
    const double ay = g.du[1] / g.w * psi + g.w * g.gs[1];
    const double axx = g.w * g.gij[0];
    const double axy = 2.0 * g.w * g.gij[1];
    const double ayy = g.w * g.gij[2];
    s.triplets.emplace_back(p, p, 1.0 / dt + g.w * g.Phi_z);
    for (const StencilEntry& e : grid_.stencil(p)) {
      const double c = ax * e.cx + ay * e.cy + axx * e.cxx + axy * e.cxy + ayy * e.cyy;
      if (e.node < n) {
        s.triplets.emplace_back(p, e.node, -c);
        continue;
      }
      const GhostRule& rule = grid_.ghost_rule(e.node - n);
      const double phi_z =
          config_.forcing.phi_z(grid_.position(rule.boundary), u[static_cast<std::size_t>(rule.boundary)]);
      s.triplets.emplace_back(p, rule.interior, -c);
      s.triplets.emplace_back(p, rule.boundary, -c * rule.phi_coef * phi_z);
      for (const auto& [node, weight] : rule.theta_terms) s.triplets.emplace_back(p, node, -c * weight);
    }
  }
  s.matrix.resize(n, n);
  s.matrix.setFromTriplets(s.triplets.begin(), s.triplets.end());
  if (!s.analyzed) {
    s.lu.analyzePattern(s.matrix);
    s.analyzed = true;
  }
  s.lu.factorize(s.matrix);
  bad_node = -1;
  spectrum.clear();
  if (s.lu.info() != Eigen::Success) return false;
  const Eigen::VectorXd delta = s.lu.solve(rhs);
  if (s.lu.info() != Eigen::Success || !delta.allFinite()) return false;
  out.u = state.u;
  for (int p = 0; p < n; ++p) out.u.values[static_cast<std::size_t>(p)] += delta[p];
  out.u.t = state.u.t + dt;
  apply_neumann(grid_, out.u, config_.forcing);
  bad_node = evaluate(out.u, out.geometry, &spectrum);
  return bad_node < 0;
}

FlowState FlowEngine::step(const FlowState& state) {
  if (config_.scheme == TimeScheme::kExplicit) {
    const double dt = stable_dt(state);
    return step(state, dt);
  }
  return step(state, state.dt_next > 0.0 ? state.dt_next : config_.dt_initial);
}

FlowState FlowEngine::step(const FlowState& state, double dt) {
  if (!(dt > 0.0)) throw UsageError("step size must be positive");
  const FlowState* current = &state;
  FlowState evaluated;
  if (state.geometry.size() != static_cast<std::size_t>(grid_.unknown_count())) {
    evaluated = state;
    evaluated.geometry = evaluate_or_throw(state.u);
    current = &evaluated;
  }
  int bad_node = -1;
  std::vector<double> spectrum;
  double h = dt;
  for (int attempt = 0; attempt <= kMaxHalvings; ++attempt, h *= 0.5) {
    FlowState next;
    const bool ok = config_.scheme == TimeScheme::kExplicit ? try_explicit(*current, h, next, bad_node, spectrum)
                                                            : try_implicit(*current, h, next, bad_node, spectrum);
    if (!ok) continue;
    next.steps = current->steps + 1;
    next.dt_last = h;
    next.dt_next = std::min(h * config_.dt_growth, config_.dt_max);
    next.a_ratio = current->a_ratio;
    next.running_M = current->running_M;
    finish_state(next);
    return next;
  }
  std::ostringstream msg;
  msg << "step from t=" << state.u.t << " rejected after " << kMaxHalvings << " halvings of dt=" << dt;
  if (bad_node >= 0) {
    msg << ": convexity lost at " << describe_node(grid_, bad_node, spectrum);
  } else {
    msg << ": linear solve failed";
  }
  throw FlowBreakdown(msg.str(), bad_node, spectrum);
}

MonitorRecord FlowEngine::monitors(const FlowState& state) const {
  const std::vector<NodeGeometry> fresh = state.geometry.empty() ? evaluate_or_throw(state.u) : std::vector<NodeGeometry>{};
  const std::vector<NodeGeometry>& geo = state.geometry.empty() ? fresh : state.geometry;
  MonitorRecord r;
  r.t = state.u.t;
  r.dt = state.dt_last;
  r.min_speed = kInf;
  r.max_speed = -kInf;
  r.min_kappa = kInf;
  r.max_kappa = -kInf;
  r.nu_vert_min = kInf;
  for (int p = 0; p < grid_.unknown_count(); ++p) {
    const NodeGeometry& g = geo[static_cast<std::size_t>(p)];
    r.min_speed = std::min(r.min_speed, g.speed);
    r.max_speed = std::max(r.max_speed, g.speed);
    r.min_kappa = std::min(r.min_kappa, g.kappa_min);
    r.max_kappa = std::max(r.max_kappa, g.kappa_max);
    r.nu_vert_min = std::min(r.nu_vert_min, 1.0 / g.w);
    r.residual = std::max(r.residual, std::abs(g.F - g.Phi));
    const double grad = std::hypot(g.du[0], g.du[1]);
    if (grid_.kind(p) == NodeKind::kBoundary) {
      r.max_grad_boundary = std::max(r.max_grad_boundary, grad);
    } else {
      r.max_grad_interior = std::max(r.max_grad_interior, grad);
      const double denom = 1.0 / g.w - state.a_ratio;
      r.interior_ratio = std::max(r.interior_ratio, denom > 0.0 ? g.kappa_max / denom : kInf);
    }
  }
  r.max_abs_speed = std::max(std::abs(r.min_speed), std::abs(r.max_speed));
  const BoundarySecondDerivatives b = boundary_second_derivatives(grid_, state.u);
  r.max_unn = b.max_unn;
  r.max_utn = b.max_utn;
  if (config_.barrier.enabled) {
    r.barrier_min = barrier_P(state).min_P;
  } else {
    r.barrier_min = kNaN;
  }
  return r;
}

BarrierResult FlowEngine::barrier_P(const FlowState& state) const {
  std::vector<int> nodes = collar_;
  std::vector<DistanceInfo> dist = collar_distance_;
  if (!config_.barrier.enabled) {
    nodes = omega_mu_nodes(grid_, mu_);
    dist.clear();
    for (int p : nodes) dist.push_back(distance_function(domain_, grid_.position(p)));
  }
  BarrierResult out;
  out.mu = mu_;
  out.N = N_;
  out.A_bar = config_.barrier.A_bar;
  out.M = state.running_M;
  out.nodes = nodes;
  out.P.resize(nodes.size());
  out.min_P = kInf;
  out.q_min = kInf;
  out.q_max = -kInf;
  out.dq_min = kInf;
  out.dq_max = -kInf;
  const double coef = out.A_bar + 0.5 * out.M;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const int p = nodes[k];
    const DistanceInfo& di = dist[k];
    const NodeDerivatives d = grid_.derivatives(state.u.span(), p);
    const double q = -di.d + N_ * di.d * di.d;
    const double dq = -1.0 + 2.0 * N_ * di.d;
    const double du_dq = dq * (d.du[0] * di.gradient[0] + d.du[1] * di.gradient[1]);
    const double z = state.u.values[static_cast<std::size_t>(p)];
    const double P = du_dq - config_.forcing.phi(grid_.position(p), z) - coef * q;
    out.P[k] = P;
    if (P < out.min_P) {
      out.min_P = P;
      out.min_node = p;
    }
    out.q_min = std::min(out.q_min, q);
    out.q_max = std::max(out.q_max, q);
    out.dq_min = std::min(out.dq_min, std::abs(dq));
    out.dq_max = std::max(out.dq_max, std::abs(dq));
    if (grid_.kind(p) == NodeKind::kBoundary) out.boundary_max_abs = std::max(out.boundary_max_abs, std::abs(P));
  }
  return out;
}

std::vector<double> FlowEngine::speed_field(const ScalarField& u) const {
  ScalarField v = u;
  v.values.resize(static_cast<std::size_t>(grid_.node_count()), 0.0);
  apply_neumann(grid_, v, config_.forcing);
  const auto geo = evaluate_or_throw(v);
  std::vector<double> out(geo.size());
  for (std::size_t p = 0; p < geo.size(); ++p) out[p] = geo[p].speed;
  return out;
}

double FlowEngine::residual(const ScalarField& u) const {
  ScalarField v = u;
  v.values.resize(static_cast<std::size_t>(grid_.node_count()), 0.0);
  apply_neumann(grid_, v, config_.forcing);
  double r = 0.0;
  for (const auto& g : evaluate_or_throw(v)) r = std::max(r, std::abs(g.F - g.Phi));
  return r;
}

IdentityReport FlowEngine::verify_evolution_identities(std::span<const ScalarField> window) const {
  if (window.size() < 3) throw UsageError("evolution identities need three consecutive states");
  const ScalarField& s0 = window[window.size() - 3];
  const ScalarField& s1 = window[window.size() - 2];
  const ScalarField& s2 = window[window.size() - 1];
  if (!(s0.t < s1.t && s1.t < s2.t)) throw UsageError("evolution identities need strictly increasing times");
  std::array<ScalarField, 3> u{s0, s1, s2};
  std::array<std::vector<NodeGeometry>, 3> geo;
  for (int k = 0; k < 3; ++k) {
    u[static_cast<std::size_t>(k)].values.resize(static_cast<std::size_t>(grid_.node_count()), 0.0);
    apply_neumann(grid_, u[static_cast<std::size_t>(k)], config_.forcing);
    geo[static_cast<std::size_t>(k)] = evaluate_or_throw(u[static_cast<std::size_t>(k)]);
  }
  const auto c = middle_derivative_weights(s0.t, s1.t, s2.t);
  const auto& mid = geo[1];
  std::vector<double> psi(static_cast<std::size_t>(grid_.node_count()), 0.0);
  for (std::size_t p = 0; p < mid.size(); ++p) psi[p] = mid[p].F - mid[p].Phi;

  IdentityReport rep;
  rep.t_mid = s1.t;
  double metric_err = 0.0, metric_err_x = 0.0, nu_err = 0.0, nu_err_x = 0.0;
  for (int p = 0; p < grid_.unknown_count(); ++p) {
    if (grid_.ring(p) > grid_.n_rho() - 2) continue;
    ++rep.nodes_checked;
    const auto pi = static_cast<std::size_t>(p);
    const NodeGeometry& g = mid[pi];
    const double du[2] = {g.du[0], g.du[1]};
    const double H[2][2] = {{g.d2u[0], g.d2u[1]}, {g.d2u[1], g.d2u[2]}};
    const double w = g.w;
    const double ps = psi[pi];
    double dpsi[2] = {0.0, 0.0};
    for (const StencilEntry& e : grid_.stencil(p)) {
      dpsi[0] += e.cx * psi[static_cast<std::size_t>(e.node)];
      dpsi[1] += e.cy * psi[static_cast<std::size_t>(e.node)];
    }
    // Tangential velocity of the normal motion in graph coordinates.
    const double xdot[2] = {-ps * du[0] / w, -ps * du[1] / w};
    double grad_inv_w[2];
    for (int l = 0; l < 2; ++l) grad_inv_w[l] = -(H[l][0] * du[0] + H[l][1] * du[1]) / (w * w * w);
    double dxdot[2][2];  // dxdot[i][k] = d_i xdot_k
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        dxdot[i][k] = -(dpsi[i] * du[k] / w + ps * H[k][i] / w + ps * du[k] * grad_inv_w[i]);
    double gm[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) gm[i][j] = (i == j ? 1.0 : 0.0) + du[i] * du[j];

    for (int i = 0; i < 2; ++i) {
      for (int j = i; j < 2; ++j) {
        double dt_g = 0.0;
        for (int k = 0; k < 3; ++k) {
          const auto& gk = geo[static_cast<std::size_t>(k)][pi];
          dt_g += c[static_cast<std::size_t>(k)] * gk.du[static_cast<std::size_t>(i)] * gk.du[static_cast<std::size_t>(j)];
        }
        double transport = 0.0;
        for (int l = 0; l < 2; ++l) transport += xdot[l] * (H[i][l] * du[j] + du[i] * H[j][l]);
        for (int k = 0; k < 2; ++k) transport += gm[k][j] * dxdot[i][k] + gm[i][k] * dxdot[j][k];
        const double rhs = -2.0 * ps * H[i][j] / w;
        rep.metric_rhs_scale = std::max(rep.metric_rhs_scale, std::abs(rhs));
        metric_err = std::max(metric_err, std::abs(dt_g + transport - rhs));
        metric_err_x = std::max(metric_err_x, std::abs(dt_g - rhs));
      }
    }
    double dt_nu = 0.0;
    for (int k = 0; k < 3; ++k) dt_nu += c[static_cast<std::size_t>(k)] / geo[static_cast<std::size_t>(k)][pi].w;
    const double transport_nu = xdot[0] * grad_inv_w[0] + xdot[1] * grad_inv_w[1];
    const double rhs_nu = -(dpsi[0] * du[0] + dpsi[1] * du[1]) / (w * w);
    rep.nu_rhs_scale = std::max(rep.nu_rhs_scale, std::abs(rhs_nu));
    nu_err = std::max(nu_err, std::abs(dt_nu + transport_nu - rhs_nu));
    nu_err_x = std::max(nu_err_x, std::abs(dt_nu - rhs_nu));
  }
  auto rel = [](double err, double scale) { return scale > 0.0 ? err / scale : err; };
  rep.metric_abs_error = metric_err;
  rep.nu_abs_error = nu_err;
  rep.metric_error = rel(metric_err, rep.metric_rhs_scale);
  rep.metric_error_fixed_x = rel(metric_err_x, rep.metric_rhs_scale);
  rep.nu_error = rel(nu_err, rep.nu_rhs_scale);
  rep.nu_error_fixed_x = rel(nu_err_x, rep.nu_rhs_scale);
  return rep;
}

void FlowEngine::require_start(const FlowState& state, InitialReport& report) const {
  report = check_initial(state.u);
  if (!report.compatible()) {
    const int node = grid_.index(grid_.n_rho() - 1, report.compat_ray);
    const Vec2& x = grid_.position(node);
    std::ostringstream w;
    w << "boundary ray " << report.compat_ray << " at x=(" << x[0] << ", " << x[1] << "): |nu.Du0 - phi| = "
      << report.compat_residual << " > " << report.compat_tol;
    throw HypothesisError({{"compatibility u_nu = phi(x, u0) on the boundary", w.str()}});
  }
  if (!report.convex()) {
    throw FlowBreakdown("initial data is not strictly convex at " +
                            describe_node(grid_, report.min_kappa_node, report.min_kappa_spectrum),
                        report.min_kappa_node, report.min_kappa_spectrum);
  }
}

RunResult FlowEngine::run() {
  RunResult res;
  FlowState probe;
  probe.u = config_.initial_field ? *config_.initial_field : sample_field(grid_, config_.initial.value);
  probe.u.t = 0.0;
  require_start(probe, res.initial);
  FlowState state = make_state(std::move(probe.u));
  res.records.push_back(state.last);

  const MonitorRecord& r0 = state.last;
  const double lo = std::min(r0.min_speed, 0.0);
  const double hi = std::max(r0.max_speed, 0.0);
  const double eps = 1e-8 * (1.0 + r0.max_abs_speed);
  res.barrier_worst = config_.barrier.enabled ? r0.barrier_min : kNaN;
  auto check = [&](const MonitorRecord& r) {
    const double excess = std::max(lo - r.min_speed, r.max_speed - hi);
    res.speed_excess = std::max(res.speed_excess, excess);
    if (excess > eps) res.speed_bounds_held = false;
    if (!(r.min_kappa > 0.0)) res.convexity_held = false;
    const double gx = r.max_grad_interior - r.max_grad_boundary;
    res.gradient_excess = std::max(res.gradient_excess, gx);
    if (gx > kGradientTol) res.gradient_max_on_boundary = false;
    if (config_.barrier.enabled) {
      res.barrier_worst = std::min(res.barrier_worst, r.barrier_min);
      if (r.barrier_min < -kBarrierTol) res.barrier_held = false;
    }
  };
  check(r0);
  int below = r0.residual < config_.tol_res ? 1 : 0;
  res.min_increment = kInf;
  const bool want_window = config_.window_time >= 0.0;
  if (want_window && config_.window_time == 0.0) res.window.push_back(state.u);
  while (below < 2 && state.u.t < config_.t_max && state.steps < config_.max_steps) {
    double dt = config_.scheme == TimeScheme::kExplicit
                    ? stable_dt(state)
                    : (state.dt_next > 0.0 ? state.dt_next : config_.dt_initial);
    dt = std::min(dt, config_.t_max - state.u.t);
    bool lands = false;
    if (want_window && res.window.empty() && state.u.t < config_.window_time) {
      if (state.u.t + dt >= config_.window_time) {
        dt = config_.window_time - state.u.t;
        lands = true;
      }
    } else if (want_window && res.window.size() < 3) {
      dt = std::min(dt, config_.window_dt);
    }
    FlowState next = step(state, dt);
    for (int p = 0; p < grid_.unknown_count(); ++p) {
      const auto pi = static_cast<std::size_t>(p);
      res.min_increment = std::min(res.min_increment, next.u.values[pi] - state.u.values[pi]);
    }
    if (res.min_increment < -kMonotoneTol) res.monotone = false;
    // A halved landing step falls short of window_time and is not recorded.
    lands = lands && next.dt_last == dt;
    if (lands) next.u.t = config_.window_time;
    if (want_window && res.window.size() < 3 && (!res.window.empty() || lands)) res.window.push_back(next.u);
    state = std::move(next);
    if (state.steps % config_.monitor_every == 0) {
      res.records.push_back(state.last);
      check(state.last);
      below = state.last.residual < config_.tol_res ? below + 1 : 0;
    }
  }
  if (res.min_increment == kInf) res.min_increment = 0.0;
  res.converged = below >= 2;
  res.timed_out = !res.converged;
  res.final_state = std::move(state);
  return res;
}

StationaryResult FlowEngine::solve_stationary() {
  constexpr int kMaxIterations = 400;
  constexpr double kGrowth = 4.0;
  constexpr double kCap = 1e12;
  FlowState probe;
  probe.u = config_.initial_field ? *config_.initial_field : sample_field(grid_, config_.initial.value);
  probe.u.t = 0.0;
  InitialReport report;
  require_start(probe, report);
  FlowState state = make_state(std::move(probe.u));
  const double target = 0.01 * config_.tol_res;
  const TimeScheme saved = config_.scheme;
  const double saved_growth = config_.dt_growth;
  const double saved_cap = config_.dt_max;
  config_.scheme = TimeScheme::kImplicit;
  config_.dt_growth = kGrowth;
  config_.dt_max = kCap;
  StationaryResult out;
  try {
    double dt = config_.dt_initial;
    while (state.last.residual >= target && out.iterations < kMaxIterations) {
      state = step(state, dt);
      dt = state.dt_next;
      ++out.iterations;
    }
  } catch (...) {
    config_.scheme = saved;
    config_.dt_growth = saved_growth;
    config_.dt_max = saved_cap;
    throw;
  }
  config_.scheme = saved;
  config_.dt_growth = saved_growth;
  config_.dt_max = saved_cap;
  out.residual = state.last.residual;
  out.converged = out.residual < target;
  out.u = std::move(state.u);
  return out;
}

RunResult run_flow(const FlowConfig& config) {
  FlowEngine engine(config);
  return engine.run();
}

StationaryResult solve_stationary(const FlowConfig& config) {
  FlowEngine engine(config);
  return engine.solve_stationary();
}

}  // namespace curveflow
