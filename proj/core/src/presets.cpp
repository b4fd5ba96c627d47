#include "curveflow/presets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace curveflow {

InitialData sphere_cap_initial(double rho) {
  if (!(rho > 0.0)) throw ConfigError("sphere radius rho must be positive");
  std::ostringstream label;
  label << "sphere_cap(rho=" << rho << ")";
  return {[rho](double x, double y) { return -std::sqrt(rho * rho - x * x - y * y); }, label.str()};
}

InitialData sphere_approach_initial(double R, double rho, double rho_start) {
  if (!(R > 0.0) || !(rho_start > R) || !(rho > rho_start)) {
    throw ConfigError("sphere approach needs R < rho_start < rho");
  }
  const double z_star = -std::sqrt(rho * rho - R * R);
  const double c0 = z_star + std::sqrt(rho_start * rho_start - R * R) + R / std::sqrt(rho * rho - R * R) -
                    R / std::sqrt(rho_start * rho_start - R * R);
  std::ostringstream label;
  label << "sphere_approach(R=" << R << ", rho=" << rho << ", rho_start=" << rho_start << ")";
  return {[rho_start, c0](double x, double y) { return c0 - std::sqrt(rho_start * rho_start - x * x - y * y); },
          label.str()};
}

InitialData paraboloid_initial(double c0, double alpha, double beta) {
  std::ostringstream label;
  label << "paraboloid(c0=" << c0 << ", alpha=" << alpha << ", beta=" << beta << ")";
  return {[c0, alpha, beta](double x, double y) { return c0 + 0.5 * (alpha * x * x + beta * y * y); }, label.str()};
}

InitialData bumped_initial(InitialData base, double eps) {
  auto fn = base.value;
  std::ostringstream label;
  label << base.label << " + " << eps << "|x|^2";
  return {[fn, eps](double x, double y) { return fn(x, y) + eps * (x * x + y * y); }, label.str()};
}

InitialData saddle_initial(InitialData base, double s) {
  auto fn = base.value;
  std::ostringstream label;
  label << base.label << " + " << s << "(x^2 - y^2)";
  return {[fn, s](double x, double y) { return fn(x, y) + s * (x * x - y * y); }, label.str()};
}

InitialData dented_initial(InitialData base, double depth, double width) {
  if (!(width > 0.0)) throw ConfigError("dent width must be positive");
  auto fn = base.value;
  std::ostringstream label;
  label << base.label << " + " << depth << " exp(-|x|^2/" << width << "^2)";
  const double inv = 1.0 / (width * width);
  return {[fn, depth, inv](double x, double y) { return fn(x, y) + depth * std::exp(-(x * x + y * y) * inv); },
          label.str()};
}

ForcingSpec sphere_forcing(double R, double rho) {
  if (!(R > 0.0) || !(rho > R)) throw ConfigError("sphere forcing needs 0 < R < rho");
  const double z_star = -std::sqrt(rho * rho - R * R);
  const double slope = R / std::sqrt(rho * rho - R * R);
  ForcingSpec f;
  f.Phi = [rho](std::span<const double>, double) { return 1.0 / rho; };
  f.Phi_z = [](std::span<const double>, double) { return 0.0; };
  f.phi = [slope, z_star](std::span<const double>, double z) { return slope - (z - z_star); };
  f.phi_z = [](std::span<const double>, double) { return -1.0; };
  f.c_phi = -1.0;
  std::ostringstream label;
  label << "sphere(R=" << R << ", rho=" << rho << ")";
  f.label = label.str();
  return f;
}

ForcingSpec affine_forcing(double Phi0, double Phi1, double g0, double g2, double k) {
  ForcingSpec f;
  f.Phi = [Phi0, Phi1](std::span<const double>, double z) { return Phi0 + Phi1 * z; };
  f.Phi_z = [Phi1](std::span<const double>, double) { return Phi1; };
  f.phi = [g0, g2, k](std::span<const double> x, double z) {
    return g0 + g2 * (x[0] * x[0] + x[1] * x[1]) - k * z;
  };
  f.phi_z = [k](std::span<const double>, double) { return -k; };
  f.c_phi = -k;
  std::ostringstream label;
  label << "affine(Phi0=" << Phi0 << ", Phi1=" << Phi1 << ", g0=" << g0 << ", g2=" << g2 << ", k=" << k << ")";
  f.label = label.str();
  return f;
}

void analytic_derivatives(const std::function<double(double, double)>& u, double x, double y, SmallVector& du,
                          SmallMatrix& d2u) {
  constexpr double h = 1e-3;
  auto d1 = [&](double ex, double ey) {
    return (-u(x + 2 * h * ex, y + 2 * h * ey) + 8 * u(x + h * ex, y + h * ey) - 8 * u(x - h * ex, y - h * ey) +
            u(x - 2 * h * ex, y - 2 * h * ey)) /
           (12 * h);
  };
  auto d2 = [&](double ex, double ey) {
    return (-u(x + 2 * h * ex, y + 2 * h * ey) + 16 * u(x + h * ex, y + h * ey) - 30 * u(x, y) +
            16 * u(x - h * ex, y - h * ey) - u(x - 2 * h * ex, y - 2 * h * ey)) /
           (12 * h * h);
  };
  auto mixed = [&](double s) {
    return (u(x + s, y + s) - u(x + s, y - s) - u(x - s, y + s) + u(x - s, y - s)) / (4 * s * s);
  };
  du = SmallVector{d1(1, 0), d1(0, 1)};
  const double uxy = (4.0 * mixed(h) - mixed(2 * h)) / 3.0;
  d2u = SmallMatrix{{d2(1, 0), uxy}, {uxy, d2(0, 1)}};
}

ForcingSpec compatible_forcing(const Domain& domain, const InitialData& initial, const CurvatureFunction& f,
                               double k, double fraction) {
  if (!(k > 0.0)) throw ConfigError("compatible forcing needs k > 0");
  if (!(fraction > 0.0) || fraction > 1.0) throw ConfigError("compatible forcing needs 0 < fraction <= 1");
  // Minimum of F(A[u0]) over a dense polar sample of the closed domain.
  constexpr int kRings = 64;
  constexpr int kRays = 128;
  double min_f = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= kRings; ++j) {
    const double r = static_cast<double>(j) / kRings;
    for (int i = 0; i < kRays; ++i) {
      const double t = 2.0 * std::numbers::pi * i / kRays;
      SmallVector du;
      SmallMatrix d2u;
      analytic_derivatives(initial.value, r * domain.a() * std::cos(t), r * domain.b() * std::sin(t), du, d2u);
      min_f = std::min(min_f, F_and_Fij(curvature_matrix(du, d2u), f).value);
      if (j == 0) break;
    }
  }
  const double Phi0 = fraction * min_f;
  auto u0 = initial.value;
  const double ia2 = 1.0 / (domain.a() * domain.a());
  const double ib2 = 1.0 / (domain.b() * domain.b());
  auto g = [u0, ia2, ib2, k](std::span<const double> x) {
    double nx = x[0] * ia2;
    double ny = x[1] * ib2;
    const double len = std::hypot(nx, ny);
    SmallVector du;
    SmallMatrix d2u;
    analytic_derivatives(u0, x[0], x[1], du, d2u);
    if (len == 0.0) return k * u0(x[0], x[1]);
    nx /= len;
    ny /= len;
    return nx * du[0] + ny * du[1] + k * u0(x[0], x[1]);
  };
  ForcingSpec out;
  out.Phi = [Phi0](std::span<const double>, double) { return Phi0; };
  out.Phi_z = [](std::span<const double>, double) { return 0.0; };
  out.phi = [g, k](std::span<const double> x, double z) { return g(x) - k * z; };
  out.phi_z = [k](std::span<const double>, double) { return -k; };
  out.c_phi = -k;
  std::ostringstream label;
  label << "compatible(" << initial.label << ", k=" << k << ", Phi=" << Phi0 << ")";
  out.label = label.str();
  return out;
}

std::vector<HypothesisViolation> validate_forcing(const ForcingSpec& forcing, const Domain& domain, double z_bound,
                                                  int samples, std::uint64_t seed) {
  std::vector<HypothesisViolation> out;
  if (!(forcing.c_phi < 0.0)) {
    std::ostringstream w;
    w << "declared c_phi = " << forcing.c_phi;
    out.push_back({"strict negativity c_phi < 0", w.str()});
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool phi_pos = true, phi_z_mono = true, bnd_neg = true;
  auto witness = [](double x, double y, double z, const char* name, double value) {
    std::ostringstream w;
    w << "x=(" << x << ", " << y << "), z=" << z << ": " << name << " = " << value;
    return w.str();
  };
  for (int s = 0; s < samples; ++s) {
    // Area-uniform sample of the ellipse; every fourth sample on the boundary.
    const double r = (s % 4 == 0) ? 1.0 : std::sqrt(unit(rng));
    const double t = 2.0 * std::numbers::pi * unit(rng);
    const double z = z_bound * (2.0 * unit(rng) - 1.0);
    const std::array<double, 2> x{r * domain.a() * std::cos(t), r * domain.b() * std::sin(t)};
    const double Phi = forcing.Phi(x, z);
    if (phi_pos && !(Phi > 0.0)) {
      out.push_back({"positivity Phi > 0", witness(x[0], x[1], z, "Phi", Phi)});
      phi_pos = false;
    }
    const double Phi_z = forcing.Phi_z(x, z);
    if (phi_z_mono && !(Phi_z >= 0.0)) {
      out.push_back({"monotonicity Phi_z >= 0", witness(x[0], x[1], z, "Phi_z", Phi_z)});
      phi_z_mono = false;
    }
    if (r == 1.0) {
      const double phi_z = forcing.phi_z(x, z);
      if (bnd_neg && !(phi_z <= forcing.c_phi && phi_z < 0.0)) {
        out.push_back({"strict negativity phi_z <= c_phi < 0", witness(x[0], x[1], z, "phi_z", phi_z)});
        bnd_neg = false;
      }
    }
  }
  return out;
}

}  // namespace curveflow
