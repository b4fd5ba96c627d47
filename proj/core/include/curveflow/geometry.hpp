#pragma once

#include <functional>
#include <span>
#include <string>

#include "curveflow/linalg.hpp"
#include "curveflow/symfunc.hpp"

namespace curveflow {

/// w = sqrt(1 + |Du|^2), the square root gamma^{ik} of the inverse metric and
/// its inverse gamma_{ij} (so that gamma_{ik} gamma_{kj} = g_{ij}).
struct GraphMetric {
  double w = 1.0;
  SmallMatrix gamma;
  SmallMatrix gamma_inv;

  SmallMatrix metric() const;          ///< g_ij = delta_ij + u_i u_j
  SmallMatrix inverse_metric() const;  ///< g^ij = delta_ij - u_i u_j / w^2
  SmallVector gradient;
};

GraphMetric graph_quantities(const SmallVector& du);

/// a_ij = gamma^{ik} u_kl gamma^{lj} / w. Exactly symmetric.
SmallMatrix curvature_matrix(const SmallVector& du, const SmallMatrix& d2u);
SmallMatrix curvature_matrix(const GraphMetric& metric, const SmallMatrix& d2u);

/// Eigenvalues ascending with the orthonormal eigenbasis (columns).
SymmetricEigen principal_curvatures(const SmallMatrix& a);

/// F(A) = f(lambda(A)) and F^{ij} = dF/da_ij, which shares A's eigenbasis and
/// has the eigenvalues f_i(lambda).
struct FValue {
  double value = 0.0;
  SmallMatrix fij;
  SymmetricEigen spectrum;
  SmallVector f_gradient;
};

/// Throws ConeViolation (carrying the minimum eigenvalue) when the spectrum of
/// `a` leaves the positive cone.
FValue F_and_Fij(const SmallMatrix& a, const CurvatureFunction& f);

/// Scalar forcing Phi(x, z) with Phi_z, boundary data phi(x, z) with phi_z,
/// and the declared bound phi_z <= c_phi < 0.
struct ForcingSpec {
  using ScalarFn = std::function<double(std::span<const double> x, double z)>;
  ScalarFn Phi;
  ScalarFn Phi_z;
  ScalarFn phi;
  ScalarFn phi_z;
  double c_phi = -1.0;
  std::string label;
};

/// Everything the flow needs at one graph point.
struct GraphPointData {
  SmallVector du;
  SmallMatrix d2u;
  double w = 1.0;
  SmallMatrix gamma;
  SmallMatrix gamma_inv;
  SmallMatrix a;
  SmallVector kappa;  ///< ascending
  SmallMatrix eigenbasis;
  double f_value = 0.0;
  SmallMatrix fij;
  SmallVector f_gradient;
  double speed = 0.0;
  double nu_vert = 1.0;  ///< 1 / w

  /// h_ij = u_ij / w
  SmallMatrix second_fundamental_form() const;
};

/// Populates every field except `speed`. Throws ConeViolation off the cone.
GraphPointData evaluate_point(const SmallVector& du, const SmallMatrix& d2u, const CurvatureFunction& f);

/// u_t = w (F - Phi(x, u)); also stores the value into point.speed.
double speed(GraphPointData& point, const ForcingSpec& forcing, std::span<const double> x, double u);

/// Derivatives of G(D^2u, Du) = F(gamma D^2u gamma / w):
/// G^{ij} = F^{kl} gamma^{ik} gamma^{lj} / w and
/// G^s = -u_s F / w^2 - 2/(w(1+w)) F^{ij} a_ik (w u_k gamma^{sj} + u_j gamma^{ks}).
struct GDerivatives {
  SmallMatrix gij;
  SmallVector gs;
  double f_value = 0.0;

  /// sum_s |G^s| / F, reported for the first-order boundedness diagnostic.
  double gradient_ratio() const;
};

GDerivatives G_derivatives(const SmallVector& du, const SmallMatrix& d2u, const CurvatureFunction& f);
GDerivatives G_derivatives(const GraphPointData& point);

}  // namespace curveflow
