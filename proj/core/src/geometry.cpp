#include "curveflow/geometry.hpp"

#include <cmath>
#include <sstream>

#include "curveflow/errors.hpp"

namespace curveflow {

SmallMatrix GraphMetric::metric() const {
  const int n = gradient.size();
  SmallMatrix g = SmallMatrix::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) += gradient[i] * gradient[j];
  return g;
}

SmallMatrix GraphMetric::inverse_metric() const {
  const int n = gradient.size();
  SmallMatrix g = SmallMatrix::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) -= gradient[i] * gradient[j] / (w * w);
  return g;
}

GraphMetric graph_quantities(const SmallVector& du) {
  const int n = du.size();
  GraphMetric m;
  m.gradient = du;
  m.w = std::sqrt(1.0 + du.norm_sq());
  m.gamma = SmallMatrix::identity(n);
  m.gamma_inv = SmallMatrix::identity(n);
  const double down = 1.0 / (m.w * (1.0 + m.w));
  const double up = 1.0 / (1.0 + m.w);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.gamma(i, j) -= du[i] * du[j] * down;
      m.gamma_inv(i, j) += du[i] * du[j] * up;
    }
  return m;
}

SmallMatrix curvature_matrix(const GraphMetric& metric, const SmallMatrix& d2u) {
  SmallMatrix a = (metric.gamma * d2u * metric.gamma) * (1.0 / metric.w);
  return a.symmetrized();
}

SmallMatrix curvature_matrix(const SmallVector& du, const SmallMatrix& d2u) {
  return curvature_matrix(graph_quantities(du), d2u);
}

SymmetricEigen principal_curvatures(const SmallMatrix& a) { return eigen_symmetric(a); }

FValue F_and_Fij(const SmallMatrix& a, const CurvatureFunction& f) {
  FValue out;
  out.spectrum = principal_curvatures(a);
  const auto& lambda = out.spectrum.values;
  if (!ConeVector::admissible(lambda.span())) {
    std::ostringstream msg;
    msg << "curvature spectrum left the positive cone: min eigenvalue " << lambda[0];
    throw ConeViolation(msg.str(), lambda[0]);
  }
  const CurvatureEvaluation ev = f.evaluate(ConeVector(lambda));
  out.value = ev.value;
  out.f_gradient = ev.gradient;
  out.fij = compose_from_basis(out.spectrum.vectors, ev.gradient);
  return out;
}

SmallMatrix GraphPointData::second_fundamental_form() const { return d2u * (1.0 / w); }

GraphPointData evaluate_point(const SmallVector& du, const SmallMatrix& d2u, const CurvatureFunction& f) {
  GraphPointData p;
  const GraphMetric metric = graph_quantities(du);
  p.du = du;
  p.d2u = d2u;
  p.w = metric.w;
  p.nu_vert = 1.0 / metric.w;
  p.gamma = metric.gamma;
  p.gamma_inv = metric.gamma_inv;
  p.a = curvature_matrix(metric, d2u);
  const FValue fv = F_and_Fij(p.a, f);
  p.kappa = fv.spectrum.values;
  p.eigenbasis = fv.spectrum.vectors;
  p.f_value = fv.value;
  p.fij = fv.fij;
  p.f_gradient = fv.f_gradient;
  return p;
}

double speed(GraphPointData& point, const ForcingSpec& forcing, std::span<const double> x, double u) {
  point.speed = point.w * (point.f_value - forcing.Phi(x, u));
  return point.speed;
}

double GDerivatives::gradient_ratio() const {
  double s = 0.0;
  for (int i = 0; i < gs.size(); ++i) s += std::abs(gs[i]);
  return s / f_value;
}

GDerivatives G_derivatives(const GraphPointData& p) {
  const int n = p.du.size();
  GDerivatives out;
  out.f_value = p.f_value;
  out.gij = (p.gamma * p.fij * p.gamma) * (1.0 / p.w);
  out.gij = out.gij.symmetrized();
  out.gs = SmallVector(n);
  const double w = p.w;
  const double c = 2.0 / (w * (1.0 + w));
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double fij = p.fij(i, j);
        if (fij == 0.0) continue;
        for (int k = 0; k < n; ++k) {
          sum += fij * p.a(i, k) * (w * p.du[k] * p.gamma(s, j) + p.du[j] * p.gamma(k, s));
        }
      }
    out.gs[s] = -p.du[s] / (w * w) * p.f_value - c * sum;
  }
  return out;
}

GDerivatives G_derivatives(const SmallVector& du, const SmallMatrix& d2u, const CurvatureFunction& f) {
  return G_derivatives(evaluate_point(du, d2u, f));
}

}  // namespace curveflow
