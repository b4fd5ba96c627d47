#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curveflow/config.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/flow.hpp"
#include "curveflow/radial.hpp"
#include "curveflow/symfunc.hpp"

namespace fs = std::filesystem;
using namespace curveflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitTimeout = 2;
constexpr int kExitBreakdown = 3;
constexpr int kExitConfig = 4;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string resolution;
  std::optional<double> tol;
  std::optional<double> tmax;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "INI configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory (overrides [output] dir)");
  cmd->add_option("--seed", o.seed, "Seed of the hypothesis sampling");
  cmd->add_option("--resolution", o.resolution, "Grid size as <n_rho>x<n_theta>");
  cmd->add_option("--tol", o.tol, "Residual tolerance sup|F - Phi|");
  cmd->add_option("--tmax", o.tmax, "Maximum flow time");
}

std::pair<int, int> parse_resolution(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t a = 0, b = 0;
    const int nr = std::stoi(text.substr(0, x), &a);
    const int nt = std::stoi(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1) throw std::invalid_argument(text);
    return {nr, nt};
  } catch (const std::exception&) {
    throw ConfigError("--resolution expects <n_rho>x<n_theta>, got '" + text + "'");
  }
}

RunConfig load(const CommonOptions& o) {
  RunConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (!o.resolution.empty()) std::tie(cfg.flow.n_rho, cfg.flow.n_theta) = parse_resolution(o.resolution);
  if (o.tol) cfg.flow.tol_res = *o.tol;
  if (o.tmax) cfg.flow.t_max = *o.tmax;
  if (o.seed) {
    cfg.seed = *o.seed;
    validate_hypotheses(cfg);
  }
  cfg.flow.validate();
  return cfg;
}

fs::path prepare_out(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_snapshot_file(const fs::path& path, const Grid& grid, const ScalarField& u) {
  std::ofstream out(path);
  write_snapshot(out, grid, u);
}

std::string config_summary(const RunConfig& cfg) {
  std::ostringstream out;
  const auto& f = cfg.flow;
  out << "config        " << cfg.source << '\n';
  out << "domain        " << to_string(f.domain.kind) << " a=" << f.domain.a << " b=" << f.domain.b << '\n';
  out << "grid          " << f.n_rho << "x" << f.n_theta << '\n';
  out << "curvature     " << f.f.name() << '\n';
  out << "forcing       " << f.forcing.label << '\n';
  out << "initial data  " << (f.initial_field ? "field" : f.initial.label) << '\n';
  out << "scheme        " << to_string(f.scheme) << "  tol_res=" << f.tol_res << "  t_max=" << f.t_max << '\n';
  out << "seed          " << cfg.seed << '\n';
  return out.str();
}

double reference_error(const RunConfig& cfg, const Grid& grid, const ScalarField& u) {
  double err = 0.0;
  for (int p = 0; p < grid.unknown_count(); ++p) {
    const Vec2& x = grid.position(p);
    err = std::max(err, std::abs(u.values[static_cast<std::size_t>(p)] - sphere_reference(cfg, x[0], x[1])));
  }
  return err;
}

int cmd_run(const CommonOptions& o) {
  const RunConfig cfg = load(o);
  const fs::path dir = prepare_out(cfg);
  std::ofstream report(dir / "report.txt");
  report << config_summary(cfg) << '\n';
  FlowEngine engine(cfg.flow);
  RunResult res;
  try {
    res = engine.run();
  } catch (const FlowBreakdown& e) {
    report << "BREAKDOWN: " << e.what() << '\n';
    std::cerr << "flow breakdown: " << e.what() << '\n';
    return kExitBreakdown;
  }
  {
    std::ofstream csv(dir / "monitors.csv");
    write_monitor_csv(csv, res.records);
  }
  write_snapshot_file(dir / "final_state.snap", engine.grid(), res.final_state.u);
  for (std::size_t k = 0; k < res.window.size(); ++k) {
    write_snapshot_file(dir / ("window_" + std::to_string(k) + ".snap"), engine.grid(), res.window[k]);
  }
  report << res.to_text();
  if (cfg.flow.barrier.enabled) {
    const BarrierResult b = engine.barrier_P(res.final_state);
    report << "barrier constants mu=" << b.mu << " N=" << b.N << " A_bar=" << b.A_bar << " M=" << b.M << '\n';
    report << "barrier |P| on the boundary " << b.boundary_max_abs << "  " << (b.boundary_max_abs <= 1e-8 ? "PASS" : "FAIL")
           << '\n';
    report << "q range and |Dq| bounds     " << (b.q_range_ok() ? "PASS" : "FAIL") << '\n';
  }
  if (cfg.has_sphere_reference) {
    report << "sup |u - sphere| " << reference_error(cfg, engine.grid(), res.final_state.u) << '\n';
  }
  std::cout << res.to_text();
  return res.converged ? kExitOk : kExitTimeout;
}

int cmd_stationary(const CommonOptions& o, bool crosscheck) {
  const RunConfig cfg = load(o);
  const fs::path dir = prepare_out(cfg);
  FlowEngine engine(cfg.flow);
  StationaryResult st;
  try {
    st = engine.solve_stationary();
  } catch (const FlowBreakdown& e) {
    std::cerr << "flow breakdown: " << e.what() << '\n';
    return kExitBreakdown;
  }
  write_snapshot_file(dir / "final_state.snap", engine.grid(), st.u);
  std::ostringstream text;
  text << config_summary(cfg) << '\n';
  text << "stationary solve: " << (st.converged ? "converged" : "not converged") << " after " << st.iterations
       << " iterations, residual " << st.residual << " (target " << 0.01 * cfg.flow.tol_res << ")\n";
  if (cfg.has_sphere_reference) text << "sup |u - sphere| " << reference_error(cfg, engine.grid(), st.u) << '\n';
  if (crosscheck) {
    FlowEngine flow_engine(cfg.flow);
    const RunResult res = flow_engine.run();
    double diff = 0.0;
    for (int p = 0; p < engine.grid().unknown_count(); ++p) {
      const auto pi = static_cast<std::size_t>(p);
      diff = std::max(diff, std::abs(st.u.values[pi] - res.final_state.u.values[pi]));
    }
    const bool ok = res.converged && diff <= 10.0 * cfg.flow.tol_res;
    text << "flow limit cross-check: sup difference " << diff << " (bound " << 10.0 * cfg.flow.tol_res << ")  "
         << (ok ? "PASS" : "FAIL") << '\n';
  }
  std::ofstream(dir / "report.txt") << text.str();
  std::cout << text.str();
  return st.converged ? kExitOk : kExitTimeout;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad list entry '" + item + "' in '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

int cmd_oracle(const CommonOptions& o, const std::string& levels, const std::string& times, double dt_ratio,
               int radial_points) {
  const RunConfig cfg = load(o);
  const fs::path dir = prepare_out(cfg);
  std::vector<double> sizes;
  if (!o.resolution.empty()) {
    sizes.push_back(cfg.flow.n_rho);
  } else {
    sizes = parse_list(levels);
  }
  const std::vector<double> t_list = parse_list(times);
  std::ostringstream table;
  table << "n_rho x n_theta, dt, t, sup_difference, ratio\n";
  std::vector<double> previous;
  for (double size : sizes) {
    FlowConfig flow = cfg.flow;
    flow.n_rho = static_cast<int>(size);
    flow.n_theta = o.resolution.empty() ? static_cast<int>(size) : cfg.flow.n_theta;
    const double h = 1.0 / (flow.n_rho - 0.5);
    const double dt = dt_ratio * h * h;
    const OracleComparison cmp = compare_with_radial(flow, dt, radial_points, t_list);
    for (std::size_t k = 0; k < cmp.times.size(); ++k) {
      table << flow.n_rho << "x" << flow.n_theta << ", " << dt << ", " << cmp.times[k] << ", "
            << cmp.sup_difference[k] << ", ";
      if (previous.size() == cmp.times.size()) {
        table << previous[k] / cmp.sup_difference[k];
      } else {
        table << "NA";
      }
      table << '\n';
    }
    previous = cmp.sup_difference;
  }
  std::ofstream(dir / "oracle.csv") << table.str();
  std::cout << table.str();
  return kExitOk;
}

int cmd_verify(const CommonOptions& o, const std::string& trajectory) {
  const RunConfig cfg = load(o);
  FlowEngine engine(cfg.flow);
  const fs::path dir = trajectory.empty() ? fs::path(cfg.out_dir) : fs::path(trajectory);
  std::ostringstream text;
  bool ok = true;

  const FlowState initial = engine.initial_state();
  const InitialReport init = engine.check_initial(initial.u);
  text << "initial data\n" << init.to_text();
  ok = ok && init.compatible() && init.convex();

  std::vector<ScalarField> window;
  for (int k = 0; k < 3; ++k) {
    const fs::path path = dir / ("window_" + std::to_string(k) + ".snap");
    std::ifstream in(path);
    if (!in) {
      throw UsageError("missing " + path.string() + "; run with [solver] window_time >= 0 first");
    }
    window.push_back(field_from_snapshot(engine.grid(), read_snapshot(in)));
  }
  const FlowState mid = engine.make_state(window[1], initial.a_ratio, initial.running_M);
  const BarrierResult b = engine.barrier_P(mid);
  const bool barrier_ok = b.min_P >= -1e-8 && b.boundary_max_abs <= 1e-8 && b.q_range_ok();
  text << "barrier at t=" << mid.u.t << ": min P " << b.min_P << ", |P| on boundary " << b.boundary_max_abs
       << ", q range " << (b.q_range_ok() ? "ok" : "violated") << "  " << (barrier_ok ? "PASS" : "FAIL") << '\n';
  ok = ok && barrier_ok;
  const IdentityReport id = engine.verify_evolution_identities(window);
  const bool id_ok = id.metric_error <= 0.05 && id.nu_error <= 0.05;
  text << id.to_text() << "evolution identities  " << (id_ok ? "PASS" : "FAIL") << '\n';
  ok = ok && id_ok;
  std::cout << text.str();
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_props(const std::string& family, int n, int index, int samples, std::uint64_t seed, double target,
              const std::string& out) {
  const CurvatureFunction f = CurvatureFunction::from_name(family, n, index);
  StructureOptions options;
  options.growth_target = target;
  const StructureReport report = check_structure(f, samples, seed, options);
  std::cout << report.to_text();
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(fs::path(out) / "report.txt") << report.to_text();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neumann curvature flow of convex graphs"};
  app.require_subcommand(1);

  CommonOptions run_opts, stat_opts, oracle_opts, verify_opts;
  auto* run = app.add_subcommand("run", "Integrate the flow until the residual drops below tolerance");
  add_common(run, run_opts);

  auto* stationary = app.add_subcommand("stationary", "Solve F(A[u]) = Phi directly by pseudo-time iteration");
  add_common(stationary, stat_opts);
  bool crosscheck = false;
  stationary->add_flag("--crosscheck", crosscheck, "Also run the flow and compare the limits");

  auto* oracle = app.add_subcommand("oracle", "Compare the 2-D engine with the radial oracle");
  add_common(oracle, oracle_opts);
  std::string levels = "16,32";
  std::string times = "0.1,0.2";
  double dt_ratio = 1.0;
  int radial_points = 256;
  oracle->add_option("--levels", levels, "Comma-separated n_rho = n_theta values");
  oracle->add_option("--times", times, "Comma-separated comparison times");
  oracle->add_option("--dt-ratio", dt_ratio, "2-D step as a multiple of h_rho^2")->check(CLI::PositiveNumber);
  oracle->add_option("--radial-points", radial_points, "Radial oracle nodes")->check(CLI::Range(4, 1 << 16));

  auto* verify = app.add_subcommand("verify", "Check initial data, barrier and evolution identities on a saved window");
  add_common(verify, verify_opts);
  std::string trajectory;
  verify->add_option("--trajectory", trajectory, "Directory with window_0..2.snap (default: output dir)");

  auto* props = app.add_subcommand("props", "Structure-condition report for a curvature function");
  std::string family = "combined";
  int n = 2, index = 1, samples = 1000;
  std::uint64_t seed = 1;
  double target = 3.0;
  std::string props_out;
  props->add_option("--family", family, "root, quotient or combined");
  props->add_option("--n", n, "Dimension")->check(CLI::Range(1, 8));
  props->add_option("--index", index, "k for root, l otherwise");
  props->add_option("--samples", samples, "Random cone samples")->check(CLI::PositiveNumber);
  props->add_option("--seed", seed, "Sampling seed");
  props->add_option("--growth-target", target, "Value the growth ladder must exceed");
  props->add_option("--out", props_out, "Also write report.txt here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*stationary) return cmd_stationary(stat_opts, crosscheck);
    if (*oracle) return cmd_oracle(oracle_opts, levels, times, dt_ratio, radial_points);
    if (*verify) return cmd_verify(verify_opts, trajectory);
    if (*props) return cmd_props(family, n, index, samples, seed, target, props_out);
  } catch (const FlowBreakdown& e) {
    std::cerr << "flow breakdown: " << e.what() << '\n';
    return kExitBreakdown;
  } catch (const HypothesisError& e) {
    std::cerr << "hypothesis check failed: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
