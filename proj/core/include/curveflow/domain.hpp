#pragma once

#include <array>
#include <string>

#include "curveflow/linalg.hpp"

namespace curveflow {

using Vec2 = std::array<double, 2>;

enum class DomainKind { kDisk, kEllipse };

struct DomainSpec {
  DomainKind kind = DomainKind::kDisk;
  double a = 1.0;  ///< semi-axis along x (the radius for a disk)
  double b = 1.0;  ///< semi-axis along y

  static DomainSpec disk(double radius) { return {DomainKind::kDisk, radius, radius}; }
  static DomainSpec ellipse(double a, double b) { return {DomainKind::kEllipse, a, b}; }
};

std::string to_string(DomainKind kind);

/// Strictly convex domain centred at the origin, boundary parametrised by
/// p(t) = (a cos t, b sin t).
class Domain {
 public:
  DomainKind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  DomainSpec spec() const noexcept { return {kind_, a_, b_}; }

  /// Lower/upper bounds of the boundary curvature (k0, k1).
  double k0() const noexcept { return k0_; }
  double k1() const noexcept { return k1_; }
  /// Width of the collar on which the distance function is smooth: 1 / k1.
  double reach() const noexcept { return 1.0 / k1_; }

  Vec2 boundary_point(double t) const noexcept;
  Vec2 outward_normal(double t) const noexcept;
  Vec2 unit_tangent(double t) const noexcept;
  double boundary_curvature(double t) const noexcept;
  /// x^2/a^2 + y^2/b^2; 1 on the boundary.
  double level(const Vec2& x) const noexcept;
  bool contains(const Vec2& x, double slack = 1e-12) const noexcept;

 private:
  friend Domain build_domain(const DomainSpec& spec);
  DomainKind kind_ = DomainKind::kDisk;
  double a_ = 1.0;
  double b_ = 1.0;
  double k0_ = 1.0;
  double k1_ = 1.0;
};

/// Throws ConfigError on a non-positive axis.
Domain build_domain(const DomainSpec& spec);

/// Boundary distance d, its gradient Dd (so that -Dd is the outward normal at
/// the foot point) and Hessian D^2 d = -kappa/(1 - kappa d) tau tau^T.
struct DistanceInfo {
  double d = 0.0;
  Vec2 gradient{};
  SmallMatrix hessian;
  Vec2 foot{};
  double foot_parameter = 0.0;
  double foot_curvature = 0.0;
  /// False where the Hessian formula degenerates (kappa d >= 1).
  bool smooth = true;
};

/// Throws DomainError when x lies outside the closed domain.
DistanceInfo distance_function(const Domain& domain, const Vec2& x);

}  // namespace curveflow
