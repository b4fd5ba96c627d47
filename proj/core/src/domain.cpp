#include "curveflow/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "curveflow/errors.hpp"

namespace curveflow {

std::string to_string(DomainKind kind) { return kind == DomainKind::kDisk ? "disk" : "ellipse"; }

Domain build_domain(const DomainSpec& spec) {
  if (!(spec.a > 0.0) || !(spec.b > 0.0) || !std::isfinite(spec.a) || !std::isfinite(spec.b)) {
    std::ostringstream msg;
    msg << "domain axes must be positive, got a=" << spec.a << " b=" << spec.b;
    throw ConfigError(msg.str());
  }
  if (spec.kind == DomainKind::kDisk && spec.a != spec.b) {
    throw ConfigError("disk domain needs a == b");
  }
  Domain d;
  d.kind_ = spec.kind;
  d.a_ = spec.a;
  d.b_ = spec.b;
  // Ellipse curvature ab/(a^2 s^2 + b^2 c^2)^{3/2} is extremal at the vertices.
  const double lo = std::min(spec.a, spec.b);
  const double hi = std::max(spec.a, spec.b);
  d.k0_ = lo / (hi * hi);
  d.k1_ = hi / (lo * lo);
  return d;
}

Vec2 Domain::boundary_point(double t) const noexcept { return {a_ * std::cos(t), b_ * std::sin(t)}; }

Vec2 Domain::outward_normal(double t) const noexcept {
  const double nx = b_ * std::cos(t);
  const double ny = a_ * std::sin(t);
  const double len = std::hypot(nx, ny);
  return {nx / len, ny / len};
}

Vec2 Domain::unit_tangent(double t) const noexcept {
  const double tx = -a_ * std::sin(t);
  const double ty = b_ * std::cos(t);
  const double len = std::hypot(tx, ty);
  return {tx / len, ty / len};
}

double Domain::boundary_curvature(double t) const noexcept {
  const double s = std::sin(t);
  const double c = std::cos(t);
  const double q = a_ * a_ * s * s + b_ * b_ * c * c;
  return a_ * b_ / (q * std::sqrt(q));
}

double Domain::level(const Vec2& x) const noexcept {
  return x[0] * x[0] / (a_ * a_) + x[1] * x[1] / (b_ * b_);
}

bool Domain::contains(const Vec2& x, double slack) const noexcept { return level(x) <= 1.0 + slack; }

namespace {

double squared_distance(const Domain& dom, const Vec2& x, double t) {
  const Vec2 p = dom.boundary_point(t);
  return (x[0] - p[0]) * (x[0] - p[0]) + (x[1] - p[1]) * (x[1] - p[1]);
}

// Newton on g(t) = (p(t) - x) . p'(t). Returns false unless it lands on a
// local minimum of |x - p(t)| within the iteration cap.
bool newton_foot(const Domain& dom, const Vec2& x, double& t) {
  const double a = dom.a();
  const double b = dom.b();
  constexpr int kMaxIterations = 30;
  constexpr double kTolerance = 1e-12;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double s = std::sin(t);
    const double c = std::cos(t);
    const double g = (b * b - a * a) * s * c + a * x[0] * s - b * x[1] * c;
    const double dg = (b * b - a * a) * (c * c - s * s) + a * x[0] * c + b * x[1] * s;
    if (dg <= 0.0) return false;
    const double step = g / dg;
    t -= step;
    if (std::abs(step) < kTolerance) {
      const double s2 = std::sin(t);
      const double c2 = std::cos(t);
      return (b * b - a * a) * (c2 * c2 - s2 * s2) + a * x[0] * c2 + b * x[1] * s2 > 0.0;
    }
  }
  return false;
}

}  // namespace

DistanceInfo distance_function(const Domain& dom, const Vec2& x) {
  if (!dom.contains(x)) {
    std::ostringstream msg;
    msg << "point (" << x[0] << ", " << x[1] << ") lies outside the domain";
    throw DomainError(msg.str());
  }
  DistanceInfo out;
  out.hessian = SmallMatrix(2);

  double t = 0.0;
  if (dom.kind() == DomainKind::kDisk) {
    const double r = std::hypot(x[0], x[1]);
    t = r > 0.0 ? std::atan2(x[1], x[0]) : 0.0;
    out.d = std::max(0.0, dom.a() - r);
  } else {
    t = std::atan2(x[1] / dom.b(), x[0] / dom.a());
    double t_newton = t;
    bool ok = newton_foot(dom, x, t_newton);
    if (ok) {
      t = t_newton;
    } else {
      // Near the medial axis the angular seed may sit on a distance maximum;
      // reseed from the closest of a coarse boundary sample.
      constexpr int kSeeds = 256;
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < kSeeds; ++k) {
        const double tk = 2.0 * std::numbers::pi * k / kSeeds;
        const double dk = squared_distance(dom, x, tk);
        if (dk < best) {
          best = dk;
          t = tk;
        }
      }
      t_newton = t;
      if (newton_foot(dom, x, t_newton)) t = t_newton;
    }
    out.d = std::sqrt(squared_distance(dom, x, t));
    if (dom.level(x) >= 1.0) out.d = 0.0;
  }

  out.foot_parameter = t;
  out.foot = dom.boundary_point(t);
  out.foot_curvature = dom.boundary_curvature(t);
  const Vec2 nu = dom.outward_normal(t);
  out.gradient = {-nu[0], -nu[1]};
  const double denom = 1.0 - out.foot_curvature * out.d;
  if (denom > 1e-12) {
    const Vec2 tau = dom.unit_tangent(t);
    const double coef = -out.foot_curvature / denom;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        out.hessian(i, j) = coef * tau[static_cast<std::size_t>(i)] * tau[static_cast<std::size_t>(j)];
  } else {
    out.smooth = false;
  }
  return out;
}

}  // namespace curveflow
