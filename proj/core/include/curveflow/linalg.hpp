#pragma once

#include <array>
#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace curveflow {

/// Largest dimension supported by the symmetric-function and geometry layers.
inline constexpr int kMaxDim = 8;

/// Fixed-capacity dense vector of runtime size n <= kMaxDim. No heap traffic.
class SmallVector {
 public:
  SmallVector() = default;
  explicit SmallVector(int n, double fill = 0.0);
  SmallVector(std::initializer_list<double> values);
  explicit SmallVector(std::span<const double> values);

  int size() const noexcept { return n_; }
  double& operator[](int i) noexcept {
    assert(i >= 0 && i < n_);
    return data_[static_cast<std::size_t>(i)];
  }
  double operator[](int i) const noexcept {
    assert(i >= 0 && i < n_);
    return data_[static_cast<std::size_t>(i)];
  }
  std::span<const double> span() const noexcept { return {data_.data(), static_cast<std::size_t>(n_)}; }
  std::span<double> span() noexcept { return {data_.data(), static_cast<std::size_t>(n_)}; }

  double dot(const SmallVector& other) const noexcept;
  double norm_sq() const noexcept { return dot(*this); }
  double max_abs() const noexcept;

 private:
  std::array<double, kMaxDim> data_{};
  int n_ = 0;
};

/// Fixed-capacity dense n x n matrix, row-major.
class SmallMatrix {
 public:
  SmallMatrix() = default;
  explicit SmallMatrix(int n, double fill = 0.0);
  SmallMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static SmallMatrix identity(int n);
  static SmallMatrix diagonal(const SmallVector& d);

  int size() const noexcept { return n_; }
  double& operator()(int i, int j) noexcept {
    assert(i >= 0 && i < n_ && j >= 0 && j < n_);
    return data_[static_cast<std::size_t>(i * kMaxDim + j)];
  }
  double operator()(int i, int j) const noexcept {
    assert(i >= 0 && i < n_ && j >= 0 && j < n_);
    return data_[static_cast<std::size_t>(i * kMaxDim + j)];
  }

  SmallMatrix transpose() const;
  SmallMatrix operator*(const SmallMatrix& rhs) const;
  SmallVector operator*(const SmallVector& rhs) const;
  SmallMatrix operator+(const SmallMatrix& rhs) const;
  SmallMatrix operator-(const SmallMatrix& rhs) const;
  SmallMatrix operator*(double s) const;

  /// Largest |a_ij - a_ji|.
  double asymmetry() const noexcept;
  double max_abs() const noexcept;
  /// (A + A^T) / 2
  SmallMatrix symmetrized() const;

 private:
  std::array<double, kMaxDim * kMaxDim> data_{};
  int n_ = 0;
};

/// Spectral decomposition of a symmetric matrix: A = V diag(values) V^T.
/// Eigenvalues ascending; column k of `vectors` belongs to values[k].
struct SymmetricEigen {
  SmallVector values;
  SmallMatrix vectors;
};

/// Cyclic Jacobi for n > 2, closed form for n <= 2. Ties keep the order the
/// rotation sweep produced them in.
SymmetricEigen eigen_symmetric(const SmallMatrix& a);

/// sum_k d_k v_k v_k^T with v_k the columns of `basis`.
SmallMatrix compose_from_basis(const SmallMatrix& basis, const SmallVector& d);

}  // namespace curveflow
