#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "curveflow/linalg.hpp"

namespace curveflow {

/// A point of the open positive cone: every entry exceeds
/// kConeTolerance * max(1, |lambda|_inf). Construction throws ConeViolation otherwise.
class ConeVector {
 public:
  static constexpr double kConeTolerance = 1e-14;

  explicit ConeVector(std::span<const double> entries);
  explicit ConeVector(const SmallVector& entries);
  ConeVector(std::initializer_list<double> entries);

  int size() const noexcept { return entries_.size(); }
  double operator[](int i) const noexcept { return entries_[i]; }
  const SmallVector& entries() const noexcept { return entries_; }
  double min_entry() const noexcept;

  /// True when `entries` would be accepted by the constructor.
  static bool admissible(std::span<const double> entries) noexcept;

 private:
  SmallVector entries_;
};

/// Raw elementary symmetric polynomial and its normalization by binomial(n, k).
struct SymmetricPolynomial {
  double raw;
  double normalized;
};

/// sigma_k(lambda) and H_k = sigma_k / C(n,k). Throws IndexError unless 0 <= k <= n.
SymmetricPolynomial sigma_k(const ConeVector& lambda, int k);

/// All sigma_0..sigma_n via the product-expansion recurrence
/// prod_i (1 + lambda_i t) = sum_k sigma_k t^k. `out` must hold n + 1 entries.
void elementary_symmetric(std::span<const double> lambda, std::span<double> out);

double binomial(int n, int k);

enum class FamilyKind {
  kRoot,      ///< H_k^{1/k}
  kQuotient,  ///< (H_n / H_l)^{1/(n-l)}
  kCombined,  ///< (H_n^{1/n} + (H_n / H_l)^{1/(n-l)}) / 2
};

/// Value and gradient of a curvature function at one cone point.
struct CurvatureEvaluation {
  double value = 0.0;
  SmallVector gradient;
};

/// Symmetric, concave, degree-one homogeneous function on the positive cone.
class CurvatureFunction {
 public:
  static CurvatureFunction root(int n, int k);
  static CurvatureFunction quotient(int n, int l);
  static CurvatureFunction combined(int n, int l);
  /// Builds a family from its name: "root", "quotient" or "combined".
  static CurvatureFunction from_name(const std::string& family, int n, int index);

  /// Multiplies the function by `factor`. The result is no longer normalized;
  /// used to probe the time-step scaling.
  CurvatureFunction scaled(double factor) const;

  FamilyKind family() const noexcept { return family_; }
  int dim() const noexcept { return n_; }
  /// k for the root family, l otherwise.
  int index() const noexcept { return index_; }
  double scale() const noexcept { return scale_; }
  std::string name() const;

  double value(const ConeVector& lambda) const;
  SmallVector gradient(const ConeVector& lambda) const;
  CurvatureEvaluation evaluate(const ConeVector& lambda) const;

 private:
  CurvatureFunction(FamilyKind family, int n, int index);

  FamilyKind family_;
  int n_;
  int index_;
  double scale_ = 1.0;
};

double eval_f(const CurvatureFunction& f, const ConeVector& lambda);
SmallVector grad_f(const CurvatureFunction& f, const ConeVector& lambda);

/// One row of the structure-condition report.
struct StructureCheck {
  std::string condition;  ///< gradient, concavity, boundary, normalization, homogeneity, growth
  std::string description;
  bool passed = false;
  double worst = 0.0;  ///< worst observed margin, sign convention per row
  std::string detail;
};

struct StructureReport {
  std::string family;
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<StructureCheck> checks;

  bool all_passed() const;
  const StructureCheck& row(const std::string& condition) const;
  std::string to_text() const;
};

struct StructureOptions {
  /// Target the growth ladder f(lambda', lambda_n + R) must exceed.
  double growth_target = 3.0;
  double concavity_slack = -1e-10;
  double homogeneity_rel_tol = 1e-12;
  /// Entries of random samples are log-uniform in [lo, hi].
  double sample_lo = 0.05;
  double sample_hi = 20.0;
  /// Scale factor applied to every sample (probes lambda vs 2 lambda invariance).
  double sample_scale = 1.0;
};

/// Random-sample and probe checks of the structure conditions: positive
/// gradient, midpoint concavity, vanishing on the cone boundary,
/// normalization, homogeneity and the growth ladder R in {1, 10, ..., 1e4}.
StructureReport check_structure(const CurvatureFunction& f, int sample_count, std::uint64_t seed,
                                const StructureOptions& options = {});

}  // namespace curveflow
