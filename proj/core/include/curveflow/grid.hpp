#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "curveflow/domain.hpp"
#include "curveflow/geometry.hpp"

namespace curveflow {

enum class NodeKind { kInterior, kBoundary, kGhost };

/// Weights turning nodal values into Cartesian first and second derivatives at
/// one node: u_x = sum cx * u[node], ..., u_yy = sum cyy * u[node].
struct StencilEntry {
  int node = 0;
  double cx = 0.0;
  double cy = 0.0;
  double cxx = 0.0;
  double cxy = 0.0;
  double cyy = 0.0;
};

/// Cartesian derivatives at one node; d2u holds (u_xx, u_xy, u_yy).
struct NodeDerivatives {
  Vec2 du{};
  std::array<double, 3> d2u{};

  SmallVector gradient() const { return SmallVector{du[0], du[1]}; }
  SmallMatrix hessian() const { return SmallMatrix{{d2u[0], d2u[1]}, {d2u[1], d2u[2]}}; }
};

/// Ghost value on ray i as an affine function of the boundary data:
/// u_ghost = u[interior] + phi_coef * phi(x_b, u[boundary]) + sum theta_terms.
struct GhostRule {
  int ghost = 0;
  int interior = 0;
  int boundary = 0;
  double phi_coef = 0.0;
  std::array<std::pair<int, double>, 5> theta_terms{};
};

/// Boundary-fitted mapped polar grid x(rho, theta) = rho (a cos theta, b sin theta).
///
/// Rings sit at rho_j = (j + 1/2) h_rho, j = 0..n_rho-1, with h_rho = 1/(n_rho - 1/2)
/// so the last ring lies on the boundary; ring n_rho is the ghost ring. No node
/// sits at the pole: the ring below ring 0 is ring 0 itself rotated by pi.
/// Radial stencils are second-order central differences; angular stencils are
/// the five-point weights exact on trigonometric polynomials of degree two,
/// which makes the Cartesian derivatives exact on quadratics.
class Grid {
 public:
  Grid(const Domain& domain, int n_rho, int n_theta);

  const Domain& domain() const noexcept { return domain_; }
  int n_rho() const noexcept { return n_rho_; }
  int n_theta() const noexcept { return n_theta_; }
  double h_rho() const noexcept { return h_rho_; }
  double h_theta() const noexcept { return h_theta_; }

  /// All nodes including the ghost ring.
  int node_count() const noexcept { return (n_rho_ + 1) * n_theta_; }
  /// Interior and boundary nodes (the discrete unknowns); they come first.
  int unknown_count() const noexcept { return n_rho_ * n_theta_; }

  int index(int ring, int ray) const noexcept;
  int ring(int node) const noexcept { return node / n_theta_; }
  int ray(int node) const noexcept { return node % n_theta_; }
  NodeKind kind(int node) const noexcept;

  double rho(int ring) const noexcept { return (ring + 0.5) * h_rho_; }
  double theta(int ray) const noexcept { return ray * h_theta_; }
  const Vec2& position(int node) const noexcept { return positions_[static_cast<std::size_t>(node)]; }
  /// Outward unit normal of the boundary node on `ray`.
  const Vec2& boundary_normal(int ray) const noexcept { return normals_[static_cast<std::size_t>(ray)]; }
  /// Smallest physical edge length of the cell around the node.
  double local_spacing(int node) const noexcept { return spacing_[static_cast<std::size_t>(node)]; }

  std::span<const StencilEntry> stencil(int node) const noexcept;
  /// One-sided (in rho) stencil on boundary nodes, used by the boundary monitors.
  std::span<const StencilEntry> one_sided_stencil(int ray) const noexcept;
  const GhostRule& ghost_rule(int ray) const noexcept { return ghost_rules_[static_cast<std::size_t>(ray)]; }

  NodeDerivatives derivatives(std::span<const double> u, int node) const noexcept;
  NodeDerivatives one_sided_derivatives(std::span<const double> u, int ray) const noexcept;

  /// Angular stencil weights (offsets -2..2) for first and second derivatives.
  const std::array<double, 5>& theta_d1() const noexcept { return d1_; }
  const std::array<double, 5>& theta_d2() const noexcept { return d2_; }

 private:
  void build_stencils();

  Domain domain_;
  int n_rho_;
  int n_theta_;
  double h_rho_;
  double h_theta_;
  std::array<double, 5> d1_{};
  std::array<double, 5> d2_{};
  std::vector<Vec2> positions_;
  std::vector<Vec2> normals_;
  std::vector<double> spacing_;
  std::vector<int> offsets_;
  std::vector<StencilEntry> entries_;
  std::vector<int> boundary_offsets_;
  std::vector<StencilEntry> boundary_entries_;
  std::vector<GhostRule> ghost_rules_;
};

/// Nodal values on every node (ghost ring included) with a time stamp.
struct ScalarField {
  std::vector<double> values;
  double t = 0.0;

  std::span<const double> span() const noexcept { return values; }
  std::span<double> span() noexcept { return values; }
};

/// Samples `fn` at every node, the ghost ring included.
template <typename Fn>
ScalarField sample_field(const Grid& grid, Fn&& fn) {
  ScalarField field;
  field.values.resize(static_cast<std::size_t>(grid.node_count()));
  for (int p = 0; p < grid.node_count(); ++p) {
    const Vec2& x = grid.position(p);
    field.values[static_cast<std::size_t>(p)] = fn(x[0], x[1]);
  }
  return field;
}

/// Derivatives at every interior and boundary node (index = node id).
struct DerivativeField {
  std::vector<NodeDerivatives> nodes;
};

DerivativeField differentiate(const Grid& grid, const ScalarField& field);

/// Fills the ghost ring so that the discrete normal derivative at every
/// boundary node equals phi(x, u(x)).
void apply_neumann(const Grid& grid, ScalarField& field, const ForcingSpec& forcing);

/// Discrete nu . Du - phi(x, u) on each boundary ray.
std::vector<double> neumann_residual(const Grid& grid, const ScalarField& field, const ForcingSpec& forcing);

/// Non-ghost nodes with d(x) < mu. Throws ConfigError unless 0 < mu < reach.
std::vector<int> omega_mu_nodes(const Grid& grid, double mu);

/// Plain-text snapshot: header (kind, a, b, n_rho, n_theta, t) then one
/// "rho theta x y u" line per non-ghost node, rho outer.
void write_snapshot(std::ostream& out, const Grid& grid, const ScalarField& field);

struct Snapshot {
  DomainSpec domain;
  int n_rho = 0;
  int n_theta = 0;
  double t = 0.0;
  std::vector<double> values;  ///< non-ghost nodes in grid order
};

/// Throws ParseError with the offending line.
Snapshot read_snapshot(std::istream& in);

/// Copies snapshot values into a field on `grid` (ghost ring left at zero).
ScalarField field_from_snapshot(const Grid& grid, const Snapshot& snapshot);

}  // namespace curveflow
