#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curveflow/domain.hpp"
#include "curveflow/geometry.hpp"
#include "curveflow/grid.hpp"
#include "curveflow/presets.hpp"
#include "curveflow/symfunc.hpp"

namespace curveflow {

enum class TimeScheme {
  kExplicit,  ///< forward Euler with dt from stable_dt
  kImplicit,  ///< linearly implicit Euler, (I/dt - J) du = w (F - Phi)
};

std::string to_string(TimeScheme scheme);
/// "explicit" or "implicit"; throws ConfigError otherwise.
TimeScheme scheme_from_name(const std::string& name);

/// Constants of the boundary barrier P = Du.Dq - phi - (A_bar + M/2) q with
/// q = -d + N d^2 on the collar Omega_mu. Zero mu or N selects the defaults
/// mu = 0.3 reach and N = 0.12 / mu.
struct BarrierParams {
  bool enabled = true;
  double mu = 0.0;
  double N = 0.0;
  double A_bar = 10.0;
};

struct FlowConfig {
  DomainSpec domain = DomainSpec::disk(1.0);
  int n_rho = 32;
  int n_theta = 32;
  CurvatureFunction f = CurvatureFunction::combined(2, 1);
  ForcingSpec forcing;
  InitialData initial;
  /// Overrides `initial` when set (values on every node of the grid).
  std::optional<ScalarField> initial_field;

  TimeScheme scheme = TimeScheme::kImplicit;
  /// Safety factor of the explicit step, in (0, 1].
  double sigma = 0.9;
  double tol_res = 1e-6;
  double t_max = 50.0;
  long max_steps = 10'000'000;
  /// Monitor records are taken every `monitor_every` accepted steps.
  int monitor_every = 1;

  /// Implicit scheme: first step, growth factor per accepted step and cap.
  double dt_initial = 1e-3;
  double dt_growth = 1.5;
  double dt_max = 1e3;

  /// The start is refused when the one-sided boundary residual
  /// |nu.Du0 - phi(x, u0)| exceeds compat_factor * h_rho^2.
  double compat_factor = 10.0;

  BarrierParams barrier;

  /// When >= 0, run_flow lands on t = window_time and stores that state and
  /// the next two, taken with steps no longer than window_dt.
  double window_time = -1.0;
  double window_dt = 0.01;

  /// Worker threads; 0 uses the hardware count capped by CURVEFLOW_THREADS.
  int threads = 0;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
};

/// Geometry at one unknown node, cached with each state.
struct NodeGeometry {
  Vec2 du{};
  std::array<double, 3> d2u{};
  double w = 1.0;
  double F = 0.0;
  double Phi = 0.0;
  double Phi_z = 0.0;
  double speed = 0.0;
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  /// G^{xx}, G^{xy}, G^{yy} and G^x, G^y.
  std::array<double, 3> gij{};
  Vec2 gs{};
};

/// Per-sample certified quantities; CSV columns follow this order.
struct MonitorRecord {
  double t = 0.0;
  double dt = 0.0;
  double max_abs_speed = 0.0;
  double min_speed = 0.0;
  double max_speed = 0.0;
  double min_kappa = 0.0;
  double max_kappa = 0.0;
  double nu_vert_min = 0.0;
  double residual = 0.0;
  double max_grad_interior = 0.0;
  double max_grad_boundary = 0.0;
  double max_unn = 0.0;
  double max_utn = 0.0;
  double interior_ratio = 0.0;
  /// NaN when the barrier is disabled (written as NA).
  double barrier_min = 0.0;
};

std::string monitor_csv_header(bool radial = false);
std::string monitor_csv_row(const MonitorRecord& record, bool radial = false);
void write_monitor_csv(std::ostream& out, const std::vector<MonitorRecord>& records, bool radial = false);

struct FlowState {
  ScalarField u;  ///< ghost ring consistent with the Neumann condition at u.t
  long steps = 0;
  double dt_last = 0.0;
  /// Implicit scheme: step size proposed for the next step.
  double dt_next = 0.0;
  /// Interior-ratio constant a = min nu^{n+1}(., 0) / 2, frozen at t = 0.
  double a_ratio = 0.0;
  /// Running maximum of the boundary u_nu_nu.
  double running_M = 0.0;
  std::vector<NodeGeometry> geometry;
  MonitorRecord last;
};

struct InitialReport {
  double compat_residual = 0.0;
  int compat_ray = -1;
  double compat_tol = 0.0;
  double supersolution_margin = 0.0;
  double min_kappa = 0.0;
  int min_kappa_node = -1;
  std::vector<double> min_kappa_spectrum;

  bool compatible() const { return compat_residual <= compat_tol; }
  bool convex() const { return min_kappa > 0.0; }
  std::string to_text() const;
};

struct BarrierResult {
  std::vector<int> nodes;
  std::vector<double> P;
  double min_P = 0.0;
  int min_node = -1;
  double boundary_max_abs = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  double dq_min = 0.0;
  double dq_max = 0.0;
  double mu = 0.0;
  double N = 0.0;
  double A_bar = 0.0;
  double M = 0.0;

  /// -mu + N mu^2 <= q <= 0 and 1/2 <= |Dq| <= 2 on the collar.
  bool q_range_ok(double tol = 1e-12) const;
};

/// Finite-difference check of d/dt g_ij = -2 (F - Phi) h_ij and
/// d/dt nu^{n+1} = -g^{ij} (F - Phi)_i u_j along the normal motion.
struct IdentityReport {
  /// Relative errors (max |lhs - rhs| / max |rhs|) along the normal motion.
  double metric_error = 0.0;
  double nu_error = 0.0;
  /// Same quantities with the time derivative taken at fixed x.
  double metric_error_fixed_x = 0.0;
  double nu_error_fixed_x = 0.0;
  double metric_rhs_scale = 0.0;
  double nu_rhs_scale = 0.0;
  double metric_abs_error = 0.0;
  double nu_abs_error = 0.0;
  int nodes_checked = 0;
  double t_mid = 0.0;

  std::string to_text() const;
};

struct RunResult {
  FlowState final_state;
  std::vector<MonitorRecord> records;
  InitialReport initial;
  bool converged = false;
  bool timed_out = false;
  /// u(x, t_{k+1}) >= u(x, t_k) - 1e-10 at every node and step.
  bool monotone = true;
  double min_increment = 0.0;
  /// Speed stayed within the initial extrema (plus 1e-8 (1 + max|u_t(0)|)).
  bool speed_bounds_held = true;
  double speed_excess = 0.0;
  bool convexity_held = true;
  bool gradient_max_on_boundary = true;
  double gradient_excess = 0.0;
  bool barrier_held = true;
  double barrier_worst = 0.0;
  std::vector<ScalarField> window;

  /// 0 converged, 2 timeout.
  int exit_code() const { return converged ? 0 : 2; }
  std::string to_text() const;
};

struct StationaryResult {
  ScalarField u;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Discrete flow on the mapped polar grid of one domain.
class FlowEngine {
 public:
  explicit FlowEngine(FlowConfig config);
  ~FlowEngine();
  FlowEngine(FlowEngine&&) noexcept;
  FlowEngine& operator=(FlowEngine&&) noexcept;
  FlowEngine(const FlowEngine&) = delete;
  FlowEngine& operator=(const FlowEngine&) = delete;

  const FlowConfig& config() const noexcept { return config_; }
  const Domain& domain() const noexcept { return domain_; }
  const Grid& grid() const noexcept { return grid_; }
  int threads() const noexcept { return threads_; }

  /// Samples the initial data, fills the ghost ring and takes the t = 0 record.
  /// Throws FlowBreakdown if the field is not strictly convex.
  FlowState initial_state() const;
  /// Wraps an arbitrary field (ghost ring recomputed) as a state.
  FlowState make_state(ScalarField u, double a_ratio = -1.0, double running_M = 0.0) const;

  InitialReport check_initial(const ScalarField& u0) const;

  /// sigma * min h_loc^2 / (2 n w lambda_max(G^{ij})).
  double stable_dt(const FlowState& state) const;

  /// One step with the configured scheme. Explicit: dt = stable_dt; implicit:
  /// dt = state.dt_next. A step that leaves the cone is retried with half the
  /// step, at most eight times, then FlowBreakdown is thrown.
  FlowState step(const FlowState& state);
  /// As step() but with an explicit starting dt.
  FlowState step(const FlowState& state, double dt);

  MonitorRecord monitors(const FlowState& state) const;
  /// Uses the state's running_M for M.
  BarrierResult barrier_P(const FlowState& state) const;

  /// Speed w (F - Phi) at every unknown node. Throws FlowBreakdown off the cone.
  std::vector<double> speed_field(const ScalarField& u) const;
  /// sup |F - Phi| over the unknown nodes.
  double residual(const ScalarField& u) const;

  /// Uses the last three fields of `window` (distinct increasing times).
  /// Throws UsageError with fewer than three fields.
  IdentityReport verify_evolution_identities(std::span<const ScalarField> window) const;

  RunResult run();
  StationaryResult solve_stationary();

 private:
  struct ImplicitSolver;

  /// Fills `out` for every unknown node; returns the first node off the cone or -1.
  int evaluate(const ScalarField& u, std::vector<NodeGeometry>& out, std::vector<double>* spectrum) const;
  std::vector<NodeGeometry> evaluate_or_throw(const ScalarField& u) const;
  void finish_state(FlowState& state) const;
  bool try_explicit(const FlowState& state, double dt, FlowState& out, int& bad_node, std::vector<double>& spectrum) const;
  bool try_implicit(const FlowState& state, double dt, FlowState& out, int& bad_node, std::vector<double>& spectrum);
  void require_start(const FlowState& state, InitialReport& report) const;

  FlowConfig config_;
  Domain domain_;
  Grid grid_;
  int threads_ = 1;
  double mu_ = 0.0;
  double N_ = 0.0;
  std::vector<int> collar_;
  std::vector<DistanceInfo> collar_distance_;
  std::unique_ptr<ImplicitSolver> solver_;
};

/// FlowEngine(config).run().
RunResult run_flow(const FlowConfig& config);
/// Pseudo-time iteration of the implicit step to residual 0.01 tol_res.
StationaryResult solve_stationary(const FlowConfig& config);

/// `requested` when positive, else the hardware concurrency; either is capped by CURVEFLOW_THREADS.
int resolve_threads(int requested);

}  // namespace curveflow
