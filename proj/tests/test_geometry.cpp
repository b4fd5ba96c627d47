#include <doctest.h>

#include <random>

#include "curveflow/errors.hpp"
#include "curveflow/geometry.hpp"
#include "curveflow/presets.hpp"
#include "oracles.hpp"

using namespace curveflow;

namespace {

struct ConvexPoint {
  SmallVector du;
  SmallMatrix d2u;
};

ConvexPoint random_convex_point(std::mt19937_64& rng, double max_slope = 3.0) {
  std::uniform_real_distribution<double> slope(-max_slope, max_slope);
  std::uniform_real_distribution<double> eig(0.3, 4.0);
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  const double l1 = eig(rng), l2 = eig(rng), th = angle(rng);
  const double c = std::cos(th), s = std::sin(th);
  ConvexPoint p;
  p.du = SmallVector{slope(rng), slope(rng)};
  p.d2u = SmallMatrix{{c * c * l1 + s * s * l2, c * s * (l1 - l2)}, {c * s * (l1 - l2), s * s * l1 + c * c * l2}};
  return p;
}

/// F(A[u]) from the shape-operator curvatures and the enumerated family.
double oracle_G(double ux, double uy, double uxx, double uxy, double uyy, int l) {
  const auto [k1, k2] = oracle::principal_curvatures_shape_operator(ux, uy, uxx, uxy, uyy);
  return oracle::combined({k1, k2}, l);
}

}  // namespace

TEST_CASE("graph quantities") {
  SUBCASE("flat gradient") {
    const GraphMetric m = graph_quantities(SmallVector{0.0, 0.0});
    CHECK(m.w == 1.0);
    CHECK((m.gamma - SmallMatrix::identity(2)).max_abs() == 0.0);
    CHECK((m.gamma_inv - SmallMatrix::identity(2)).max_abs() == 0.0);
  }
  SUBCASE("Du = (3, 4)") {
    const GraphMetric m = graph_quantities(SmallVector{3.0, 4.0});
    CHECK(m.w == doctest::Approx(std::sqrt(26.0)).epsilon(1e-15));
    const auto prod = oracle::multiply(oracle::to_dense(m.gamma), oracle::to_dense(m.gamma_inv));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(std::abs(prod[i][j] - (i == j ? 1.0 : 0.0)) <= 1e-14);
  }
  SUBCASE("square root of the metric for random gradients") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    for (int n = 1; n <= 5; ++n) {
      for (int trial = 0; trial < 50; ++trial) {
        SmallVector du(n);
        for (int i = 0; i < n; ++i) du[i] = d(rng);
        const GraphMetric m = graph_quantities(du);
        const auto gg = oracle::multiply(oracle::to_dense(m.gamma_inv), oracle::to_dense(m.gamma_inv));
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) CHECK(std::abs(gg[i][j] - ((i == j ? 1.0 : 0.0) + du[i] * du[j])) <= 1e-12);
        CHECK(m.w >= 1.0);
      }
    }
  }
}

TEST_CASE("curvature matrix and principal curvatures") {
  SUBCASE("identity Hessian at zero slope") {
    const SmallMatrix a = curvature_matrix(SmallVector{0.0, 0.0}, SmallMatrix::identity(2));
    const SymmetricEigen e = principal_curvatures(a);
    CHECK(e.values[0] == doctest::Approx(1.0));
    CHECK(e.values[1] == doctest::Approx(1.0));
  }
  SUBCASE("x^2/2 + y^2 at the origin") {
    const SymmetricEigen e = principal_curvatures(curvature_matrix(SmallVector{0.0, 0.0}, SmallMatrix{{1.0, 0.0}, {0.0, 2.0}}));
    CHECK(e.values[0] == doctest::Approx(1.0));
    CHECK(e.values[1] == doctest::Approx(2.0));
  }
  SUBCASE("sphere of radius rho has every curvature 1/rho") {
    const double rho = 2.0;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> r(-1.3, 1.3);
    for (int trial = 0; trial < 50; ++trial) {
      const double x = r(rng), y = r(rng);
      SmallVector du;
      SmallMatrix d2u;
      analytic_derivatives([rho](double px, double py) { return -std::sqrt(rho * rho - px * px - py * py); }, x, y, du, d2u);
      const double s = std::sqrt(rho * rho - x * x - y * y);
      const double s3 = s * s * s;
      const SmallMatrix exact{{1.0 / s + x * x / s3, x * y / s3}, {x * y / s3, 1.0 / s + y * y / s3}};
      CHECK(std::abs(du[0] - x / s) <= 1e-9);
      CHECK((d2u - exact).max_abs() <= 1e-6);
      du = SmallVector{x / s, y / s};
      d2u = exact;
      const SymmetricEigen e = principal_curvatures(curvature_matrix(du, d2u));
      CHECK(e.values[0] == doctest::Approx(1.0 / rho).epsilon(1e-12));
      CHECK(e.values[1] == doctest::Approx(1.0 / rho).epsilon(1e-12));
    }
  }
  SUBCASE("agrees with the shape operator and stays symmetric") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
      const SmallVector du{d(rng), d(rng)};
      const double uxy = d(rng);
      const SmallMatrix d2u{{d(rng), uxy}, {uxy, d(rng)}};
      const SmallMatrix a = curvature_matrix(du, d2u);
      CHECK(a.asymmetry() <= 1e-13);
      const auto [k1, k2] = oracle::principal_curvatures_shape_operator(du[0], du[1], d2u(0, 0), uxy, d2u(1, 1));
      const SymmetricEigen e = principal_curvatures(a);
      CHECK(e.values[0] == doctest::Approx(k1).epsilon(1e-9).scale(1.0));
      CHECK(e.values[1] == doctest::Approx(k2).epsilon(1e-9).scale(1.0));
    }
  }
  SUBCASE("SPD Hessians give positive curvatures") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 100; ++trial) {
      const ConvexPoint p = random_convex_point(rng, 5.0);
      const SymmetricEigen e = principal_curvatures(curvature_matrix(p.du, p.d2u));
      CHECK(e.values[0] > 0.0);
    }
  }
  SUBCASE("eigenvalues") {
    const SymmetricEigen e = principal_curvatures(SmallMatrix{{2.0, 1.0}, {1.0, 2.0}});
    const auto [lo, hi] = oracle::eigen2(2.0, 1.0, 2.0);
    CHECK(e.values[0] == doctest::Approx(lo));
    CHECK(e.values[1] == doctest::Approx(hi));
    CHECK(lo == doctest::Approx(1.0));
    CHECK(hi == doctest::Approx(3.0));
    const SymmetricEigen d = principal_curvatures(SmallMatrix::diagonal(SmallVector{3.0, -1.0, 2.0}));
    CHECK(d.values[0] == -1.0);
    CHECK(d.values[1] == 2.0);
    CHECK(d.values[2] == 3.0);
    for (double th : {0.1, 0.7, 1.3, 2.9}) {
      const double c = std::cos(th), s = std::sin(th);
      const SmallMatrix q{{c, -s}, {s, c}};
      const SymmetricEigen r = principal_curvatures(q * SmallMatrix{{1.0, 0.0}, {0.0, 2.0}} * q.transpose());
      CHECK(std::abs(r.values[0] - 1.0) <= 1e-12);
      CHECK(std::abs(r.values[1] - 2.0) <= 1e-12);
    }
  }
  SUBCASE("Jacobi on larger matrices reproduces A") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int n = 3; n <= 8; ++n) {
      SmallMatrix a(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = d(rng);
      const SymmetricEigen e = eigen_symmetric(a);
      CHECK((compose_from_basis(e.vectors, e.values) - a).max_abs() <= 1e-12);
      for (int k = 0; k + 1 < n; ++k) CHECK(e.values[k] <= e.values[k + 1]);
    }
  }
}

TEST_CASE("F and F^{ij}") {
  const CurvatureFunction f = CurvatureFunction::combined(2, 1);
  SUBCASE("identity") {
    const FValue v = F_and_Fij(SmallMatrix::identity(2), f);
    CHECK(v.value == doctest::Approx(1.0).epsilon(1e-14));
    const SmallVector g = grad_f(f, ConeVector{1.0, 1.0});
    const SymmetricEigen e = eigen_symmetric(v.fij);
    CHECK(e.values[0] == doctest::Approx(g[0]));
    CHECK(e.values[1] == doctest::Approx(g[1]));
  }
  SUBCASE("diagonal A") {
    const FValue v = F_and_Fij(SmallMatrix::diagonal(SmallVector{1.0, 3.0}), f);
    const SmallVector g = grad_f(f, ConeVector{1.0, 3.0});
    CHECK(v.fij(0, 0) == doctest::Approx(g[0]));
    CHECK(v.fij(1, 1) == doctest::Approx(g[1]));
    CHECK(std::abs(v.fij(0, 1)) <= 1e-15);
  }
  SUBCASE("random SPD against finite differences") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
      const ConvexPoint p = random_convex_point(rng);
      const SmallMatrix& a = p.d2u;
      const FValue v = F_and_Fij(a, f);
      auto F = [&](double a11, double a12, double a22) {
        const auto [lo, hi] = oracle::eigen2(a11, a12, a22);
        return oracle::combined({lo, hi}, 1);
      };
      CHECK(v.value == doctest::Approx(F(a(0, 0), a(0, 1), a(1, 1))).epsilon(1e-12));
      const double h = 1e-6;
      const double f11 = (F(a(0, 0) + h, a(0, 1), a(1, 1)) - F(a(0, 0) - h, a(0, 1), a(1, 1))) / (2 * h);
      const double f22 = (F(a(0, 0), a(0, 1), a(1, 1) + h) - F(a(0, 0), a(0, 1), a(1, 1) - h)) / (2 * h);
      // a symmetric perturbation moves a12 and a21 together: dF = 2 F^{12} da12
      const double f12 = (F(a(0, 0), a(0, 1) + h, a(1, 1)) - F(a(0, 0), a(0, 1) - h, a(1, 1))) / (4 * h);
      const double scale = std::max({std::abs(f11), std::abs(f22), std::abs(f12)});
      CHECK(std::abs(v.fij(0, 0) - f11) <= 1e-5 * scale);
      CHECK(std::abs(v.fij(1, 1) - f22) <= 1e-5 * scale);
      CHECK(std::abs(v.fij(0, 1) - f12) <= 1e-5 * scale);
      CHECK(eigen_symmetric(v.fij).values[0] > 0.0);
    }
  }
  SUBCASE("orthogonal invariance and homogeneity") {
    std::mt19937_64 rng(14);
    const CurvatureFunction f3 = CurvatureFunction::combined(3, 1);
    std::uniform_real_distribution<double> d(0.2, 3.0), ang(0.0, 2 * M_PI);
    for (int trial = 0; trial < 50; ++trial) {
      const SmallMatrix a = SmallMatrix::diagonal(SmallVector{d(rng), d(rng), d(rng)});
      const double t1 = ang(rng), t2 = ang(rng);
      const SmallMatrix r1{{std::cos(t1), -std::sin(t1), 0.0}, {std::sin(t1), std::cos(t1), 0.0}, {0.0, 0.0, 1.0}};
      const SmallMatrix r2{{1.0, 0.0, 0.0}, {0.0, std::cos(t2), -std::sin(t2)}, {0.0, std::sin(t2), std::cos(t2)}};
      const SmallMatrix q = r1 * r2;
      const double base = F_and_Fij(a, f3).value;
      CHECK(std::abs(F_and_Fij(q * a * q.transpose(), f3).value - base) <= 1e-12);
      CHECK(F_and_Fij(a * 3.5, f3).value == doctest::Approx(3.5 * base).epsilon(1e-13));
    }
  }
  SUBCASE("off the cone") {
    try {
      F_and_Fij(SmallMatrix{{1.0, 0.0}, {0.0, -0.25}}, f);
      FAIL("no exception");
    } catch (const ConeViolation& e) {
      CHECK(e.min_entry() == doctest::Approx(-0.25));
    }
  }
}

TEST_CASE("speed") {
  const CurvatureFunction f = CurvatureFunction::combined(2, 1);
  ForcingSpec forcing = affine_forcing(0.5, 0.0, 0.0, 0.0, 1.0);
  GraphPointData p = evaluate_point(SmallVector{0.0, 0.0}, SmallMatrix::identity(2), f);
  const double x[2] = {0.1, 0.2};
  CHECK(speed(p, forcing, x, 0.0) == doctest::Approx(0.5));
  CHECK(p.speed == doctest::Approx(0.5));

  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const ConvexPoint c = random_convex_point(rng);
    GraphPointData q = evaluate_point(c.du, c.d2u, f);
    const double F = q.f_value;
    ForcingSpec match = affine_forcing(F, 0.0, 0.0, 0.0, 1.0);
    CHECK(std::abs(speed(q, match, x, 0.3)) <= 1e-14);
    CHECK(q.nu_vert == doctest::Approx(1.0 / q.w));
    const SmallMatrix h = q.second_fundamental_form();
    CHECK(h(0, 1) == doctest::Approx(c.d2u(0, 1) / q.w));
  }

  // Sphere-preset data at the exact sphere: the speed vanishes at every point.
  const ForcingSpec sphere = sphere_forcing(1.0, 2.0);
  for (double r : {0.0, 0.3, 0.7, 1.0}) {
    const double s = std::sqrt(4.0 - r * r);
    GraphPointData q = evaluate_point(SmallVector{r / s, 0.0},
                                      SmallMatrix{{1.0 / s + r * r / (s * s * s), 0.0}, {0.0, 1.0 / s}}, f);
    const double xr[2] = {r, 0.0};
    CHECK(std::abs(speed(q, sphere, xr, -s)) <= 1e-14);
  }
}

TEST_CASE("G derivatives") {
  const CurvatureFunction f = CurvatureFunction::combined(2, 1);
  SUBCASE("flat gradient reduces to F^{ij}") {
    const SmallMatrix d2u{{1.5, 0.2}, {0.2, 0.8}};
    const GDerivatives g = G_derivatives(SmallVector{0.0, 0.0}, d2u, f);
    const FValue v = F_and_Fij(d2u, f);
    CHECK((g.gij - v.fij).max_abs() <= 1e-14);
    CHECK(std::abs(g.gs[0]) <= 1e-14);
    CHECK(std::abs(g.gs[1]) <= 1e-14);
  }
  SUBCASE("random convex points against finite differences") {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 200; ++trial) {
      const ConvexPoint c = random_convex_point(rng);
      const GDerivatives g = G_derivatives(c.du, c.d2u, f);
      double ux = c.du[0], uy = c.du[1], uxx = c.d2u(0, 0), uxy = c.d2u(0, 1), uyy = c.d2u(1, 1);
      const double h = 1e-6;
      auto G = [&] { return oracle_G(ux, uy, uxx, uxy, uyy, 1); };
      auto diff = [&](double& var, double factor) {
        const double saved = var;
        var = saved + h;
        const double p = G();
        var = saved - h;
        const double m = G();
        var = saved;
        return (p - m) / (2 * h * factor);
      };
      const double gxx = diff(uxx, 1.0), gyy = diff(uyy, 1.0), gxy = diff(uxy, 2.0);
      const double gx = diff(ux, 1.0), gy = diff(uy, 1.0);
      const double s2 = std::max({std::abs(gxx), std::abs(gyy), std::abs(gxy)});
      const double s1 = std::max({std::abs(gx), std::abs(gy), 1e-3 * s2});
      CHECK(std::abs(g.gij(0, 0) - gxx) <= 1e-4 * s2);
      CHECK(std::abs(g.gij(1, 1) - gyy) <= 1e-4 * s2);
      CHECK(std::abs(g.gij(0, 1) - gxy) <= 1e-4 * s2);
      CHECK(std::abs(g.gs[0] - gx) <= 1e-4 * s1);
      CHECK(std::abs(g.gs[1] - gy) <= 1e-4 * s1);
      CHECK(std::isfinite(g.gradient_ratio()));
      CHECK(g.f_value == doctest::Approx(G()).epsilon(1e-12));
    }
  }
}
