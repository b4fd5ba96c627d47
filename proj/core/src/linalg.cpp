#include "curveflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace curveflow {

SmallVector::SmallVector(int n, double fill) : n_(n) {
  if (n < 0 || n > kMaxDim) throw std::out_of_range("SmallVector: dimension out of range");
  std::fill_n(data_.begin(), n, fill);
}

SmallVector::SmallVector(std::initializer_list<double> values)
    : SmallVector(std::span<const double>(values.begin(), values.size())) {}

SmallVector::SmallVector(std::span<const double> values) : n_(static_cast<int>(values.size())) {
  if (values.size() > static_cast<std::size_t>(kMaxDim)) {
    throw std::out_of_range("SmallVector: dimension out of range");
  }
  std::copy(values.begin(), values.end(), data_.begin());
}

double SmallVector::dot(const SmallVector& other) const noexcept {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += (*this)[i] * other[i];
  return s;
}

double SmallVector::max_abs() const noexcept {
  double m = 0.0;
  for (int i = 0; i < n_; ++i) m = std::max(m, std::abs((*this)[i]));
  return m;
}

SmallMatrix::SmallMatrix(int n, double fill) : n_(n) {
  if (n < 0 || n > kMaxDim) throw std::out_of_range("SmallMatrix: dimension out of range");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) (*this)(i, j) = fill;
}

SmallMatrix::SmallMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : SmallMatrix(static_cast<int>(rows.size())) {
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != n_) throw std::invalid_argument("SmallMatrix: ragged rows");
    int j = 0;
    for (double v : row) (*this)(i, j++) = v;
    ++i;
  }
}

SmallMatrix SmallMatrix::identity(int n) {
  SmallMatrix m(n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

SmallMatrix SmallMatrix::diagonal(const SmallVector& d) {
  SmallMatrix m(d.size());
  for (int i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

SmallMatrix SmallMatrix::transpose() const {
  SmallMatrix t(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

SmallMatrix SmallMatrix::operator*(const SmallMatrix& rhs) const {
  SmallMatrix out(n_);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      for (int j = 0; j < n_; ++j) out(i, j) += a * rhs(k, j);
    }
  return out;
}

SmallVector SmallMatrix::operator*(const SmallVector& rhs) const {
  SmallVector out(n_);
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += (*this)(i, j) * rhs[j];
    out[i] = s;
  }
  return out;
}

SmallMatrix SmallMatrix::operator+(const SmallMatrix& rhs) const {
  SmallMatrix out(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) out(i, j) = (*this)(i, j) + rhs(i, j);
  return out;
}

SmallMatrix SmallMatrix::operator-(const SmallMatrix& rhs) const {
  SmallMatrix out(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) out(i, j) = (*this)(i, j) - rhs(i, j);
  return out;
}

SmallMatrix SmallMatrix::operator*(double s) const {
  SmallMatrix out(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) out(i, j) = (*this)(i, j) * s;
  return out;
}

double SmallMatrix::asymmetry() const noexcept {
  double m = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
  return m;
}

double SmallMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m = std::max(m, std::abs((*this)(i, j)));
  return m;
}

SmallMatrix SmallMatrix::symmetrized() const {
  SmallMatrix out(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) out(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
  return out;
}

namespace {

SymmetricEigen eigen_2x2(const SmallMatrix& a) {
  const double p = a(0, 0);
  const double q = a(1, 1);
  const double r = 0.5 * (a(0, 1) + a(1, 0));
  SymmetricEigen out{SmallVector(2), SmallMatrix(2)};
  if (r == 0.0) {
    // Already diagonal; keep original order on ties.
    if (p <= q) {
      out.values = {p, q};
      out.vectors = SmallMatrix::identity(2);
    } else {
      out.values = {q, p};
      out.vectors = {{0.0, 1.0}, {1.0, 0.0}};
    }
    return out;
  }
  const double mean = 0.5 * (p + q);
  const double half_diff = 0.5 * (p - q);
  const double radius = std::hypot(half_diff, r);
  // Smaller eigenvalue via the product to avoid cancellation when |mean| >> radius.
  double hi = mean >= 0.0 ? mean + radius : mean - radius;
  double lo = (p * q - r * r) / hi;
  if (mean < 0.0) std::swap(hi, lo);
  if (lo > hi) std::swap(lo, hi);
  out.values = {lo, hi};
  // Rotation angle of the eigenbasis.
  const double theta = 0.5 * std::atan2(2.0 * r, p - q);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // (c, s) belongs to the larger eigenvalue.
  out.vectors = {{-s, c}, {c, s}};
  return out;
}

SymmetricEigen eigen_jacobi(const SmallMatrix& input) {
  const int n = input.size();
  SmallMatrix a = input.symmetrized();
  SmallMatrix v = SmallMatrix::identity(n);
  constexpr int kMaxSweeps = 60;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-34 * std::max(diag, 1e-300)) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::array<int, kMaxDim> order{};
  std::iota(order.begin(), order.begin() + n, 0);
  std::stable_sort(order.begin(), order.begin() + n,
                   [&](int lhs, int rhs) { return a(lhs, lhs) < a(rhs, rhs); });
  SymmetricEigen out{SmallVector(n), SmallMatrix(n)};
  for (int k = 0; k < n; ++k) {
    out.values[k] = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    for (int i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace

SymmetricEigen eigen_symmetric(const SmallMatrix& a) {
  const int n = a.size();
  if (n == 1) return {SmallVector{a(0, 0)}, SmallMatrix::identity(1)};
  if (n == 2) return eigen_2x2(a);
  return eigen_jacobi(a);
}

SmallMatrix compose_from_basis(const SmallMatrix& basis, const SmallVector& d) {
  const int n = basis.size();
  SmallMatrix out(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      const double vik = basis(i, k) * d[k];
      for (int j = 0; j < n; ++j) out(i, j) += vik * basis(j, k);
    }
  return out;
}

}  // namespace curveflow
