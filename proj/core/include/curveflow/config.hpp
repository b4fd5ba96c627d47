#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "curveflow/flow.hpp"

namespace curveflow {

/// A validated run configuration.
struct RunConfig {
  FlowConfig flow;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  /// Half-height of the box Omega x [-z_bound, z_bound] used for sign checks.
  double z_bound = 10.0;
  int validation_samples = 2000;
  /// Parameters of the analytic reference when the forcing preset has one.
  bool has_sphere_reference = false;
  double sphere_rho = 0.0;
  std::string source;
};

/// INI file with sections [domain], [grid], [curvature], [forcing], [initial],
/// [solver], [barrier], [output]. Throws ParseError (with line number) on
/// malformed input, ConfigError on invalid values and HypothesisError listing
/// every sampled violation of Phi > 0, Phi_z >= 0, phi_z <= c_phi < 0.
RunConfig load_config(const std::string& path);
RunConfig parse_config(std::istream& in, const std::string& source = "<stream>");

/// Re-runs the hypothesis sampling with `seed` (after command-line overrides).
void validate_hypotheses(const RunConfig& config);

/// Exact sphere cap -sqrt(rho^2 - |x|^2) at every node, when available.
double sphere_reference(const RunConfig& config, double x, double y);

}  // namespace curveflow
