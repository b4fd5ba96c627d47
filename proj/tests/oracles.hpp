#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "curveflow/linalg.hpp"

namespace oracle {

/// sigma_k by enumerating every k-subset of indices.
inline double sigma_k_enumerated(const std::vector<double>& lambda, int k) {
  const int n = static_cast<int>(lambda.size());
  if (k == 0) return 1.0;
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double prod = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) prod *= lambda[static_cast<std::size_t>(i)];
    total += prod;
  }
  return total;
}

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

inline double H(const std::vector<double>& lambda, int k) {
  return sigma_k_enumerated(lambda, k) / binomial(static_cast<int>(lambda.size()), k);
}

/// (H_n^{1/n} + (H_n/H_l)^{1/(n-l)}) / 2 from the enumerated polynomials.
inline double combined(const std::vector<double>& lambda, int l) {
  const int n = static_cast<int>(lambda.size());
  const double hn = H(lambda, n);
  return 0.5 * (std::pow(hn, 1.0 / n) + std::pow(hn / H(lambda, l), 1.0 / (n - l)));
}

inline double quotient(const std::vector<double>& lambda, int l) {
  const int n = static_cast<int>(lambda.size());
  return std::pow(H(lambda, n) / H(lambda, l), 1.0 / (n - l));
}

/// Central difference of a scalar function of a vector, component i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& fn,
                                 std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double plus = fn(x);
  x[i] = x0 - h;
  const double minus = fn(x);
  return (plus - minus) / (2.0 * h);
}

/// Plain 2x2 / nxn dense helpers on std::vector, independent of SmallMatrix.
using Dense = std::vector<std::vector<double>>;

inline Dense to_dense(const curveflow::SmallMatrix& m) {
  Dense d(static_cast<std::size_t>(m.size()), std::vector<double>(static_cast<std::size_t>(m.size())));
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return d;
}

inline curveflow::SmallMatrix from_dense(const Dense& d) {
  curveflow::SmallMatrix m(static_cast<int>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = d[i][j];
  return m;
}

inline Dense multiply(const Dense& a, const Dense& b) {
  const std::size_t n = a.size();
  Dense c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

/// Eigenvalues of a symmetric 2x2 matrix from the characteristic polynomial.
inline std::pair<double, double> eigen2(double a, double b, double d) {
  const double m = 0.5 * (a + d);
  const double r = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  return {m - r, m + r};
}

/// Curvature of a graph computed through the shape operator g^{-1} h:
/// its eigenvalues are the principal curvatures (independent of the gamma route).
inline std::pair<double, double> principal_curvatures_shape_operator(double ux, double uy, double uxx, double uxy,
                                                                    double uyy) {
  const double w2 = 1.0 + ux * ux + uy * uy;
  const double w = std::sqrt(w2);
  // g^{-1} = I - Du Du^T / w^2, h = D^2u / w
  const double gi[2][2] = {{1.0 - ux * ux / w2, -ux * uy / w2}, {-ux * uy / w2, 1.0 - uy * uy / w2}};
  const double h[2][2] = {{uxx / w, uxy / w}, {uxy / w, uyy / w}};
  double s[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s[i][j] = gi[i][0] * h[0][j] + gi[i][1] * h[1][j];
  const double tr = s[0][0] + s[1][1];
  const double det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  return {0.5 * tr - disc, 0.5 * tr + disc};
}

/// Uniform cone samples with log-uniform entries.
inline std::vector<double> random_cone(std::mt19937_64& rng, int n, double lo = 0.05, double hi = 20.0) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = std::exp(u(rng));
  return v;
}

/// Distance from x to the ellipse (a cos t, b sin t) by dense sampling plus golden-section refinement.
inline double ellipse_distance_brute(double a, double b, double x, double y, int samples = 200000) {
  double best = 1e300, best_t = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = 2.0 * M_PI * k / samples;
    const double d = std::hypot(a * std::cos(t) - x, b * std::sin(t) - y);
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  double lo = best_t - 2.0 * M_PI / samples, hi = best_t + 2.0 * M_PI / samples;
  auto dist = [&](double t) { return std::hypot(a * std::cos(t) - x, b * std::sin(t) - y); };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    if (dist(c) < dist(d)) hi = d; else lo = c;
  }
  return dist(0.5 * (lo + hi));
}

}  // namespace oracle
