#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "curveflow/domain.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/geometry.hpp"

namespace curveflow {

/// Initial graph u0(x, y) given analytically.
struct InitialData {
  std::function<double(double, double)> value;
  std::string label;
};

/// Analytic stationary sphere u*(x) = -sqrt(rho^2 - |x|^2) over a disk of radius R < rho.
InitialData sphere_cap_initial(double rho);

/// Steeper sphere of radius rho_start < rho, shifted so that it satisfies the
/// sphere-preset Neumann condition exactly at |x| = R. Its curvature 1/rho_start
/// exceeds Phi = 1/rho, so the flow moves it upward onto u*.
InitialData sphere_approach_initial(double R, double rho, double rho_start);

/// u0 = c0 + (alpha x^2 + beta y^2) / 2.
InitialData paraboloid_initial(double c0, double alpha, double beta);

/// base + eps |x|^2: still convex, but the normal derivative moves by 2 eps R.
InitialData bumped_initial(InitialData base, double eps);

/// base + s (x^2 - y^2): loses convexity once s exceeds the smallest base curvature.
InitialData saddle_initial(InitialData base, double s);

/// base + depth exp(-|x|^2 / width^2). A narrow bump breaks convexity near the
/// centre while leaving the boundary data untouched to roundoff.
InitialData dented_initial(InitialData base, double depth, double width);

/// Phi = 1/rho, phi(x, z) = R / sqrt(rho^2 - R^2) - (z - z*), z* = -sqrt(rho^2 - R^2).
/// Stationary solution: the sphere cap of radius rho.
ForcingSpec sphere_forcing(double R, double rho);

/// Phi = Phi0 + Phi1 z and phi = g0 + g2 |x|^2 - k z.
ForcingSpec affine_forcing(double Phi0, double Phi1, double g0, double g2, double k);

/// Forcing made compatible with `initial` on any domain:
/// phi(x, z) = nu(x) . Du0(x) + k (u0(x) - z), with nu the unit gradient of the
/// boundary level function, and Phi = fraction * min F(A[u0]) so that the
/// supersolution margin is positive.
ForcingSpec compatible_forcing(const Domain& domain, const InitialData& initial, const CurvatureFunction& f,
                               double k, double fraction);

/// Central-difference gradient and Hessian of an analytic field.
void analytic_derivatives(const std::function<double(double, double)>& u, double x, double y, SmallVector& du,
                          SmallMatrix& d2u);

/// Samples Omega x [-z_bound, z_bound] and reports every violation of
/// Phi > 0, Phi_z >= 0, phi_z <= c_phi < 0 with a witness point.
std::vector<HypothesisViolation> validate_forcing(const ForcingSpec& forcing, const Domain& domain, double z_bound,
                                                  int samples, std::uint64_t seed);

}  // namespace curveflow
