#include "curveflow/symfunc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "curveflow/errors.hpp"

namespace curveflow {

namespace {

double cone_floor(std::span<const double> entries) noexcept {
  double inf_norm = 0.0;
  for (double v : entries) inf_norm = std::max(inf_norm, std::abs(v));
  return ConeVector::kConeTolerance * std::max(1.0, inf_norm);
}

// sigma_{0..n} of lambda with entry `skip` removed (skip < 0 keeps all).
void symmetric_sums(std::span<const double> lambda, int skip, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  out[0] = 1.0;
  int used = 0;
  for (int i = 0; i < static_cast<int>(lambda.size()); ++i) {
    if (i == skip) continue;
    ++used;
    const double li = lambda[static_cast<std::size_t>(i)];
    for (int k = used; k >= 1; --k) out[static_cast<std::size_t>(k)] += li * out[static_cast<std::size_t>(k - 1)];
  }
}

struct SymmetricData {
  std::array<double, kMaxDim + 1> sigma{};
  // d_sigma[i][k] = d sigma_k / d lambda_i = sigma_{k-1}(lambda without i)
  std::array<std::array<double, kMaxDim + 1>, kMaxDim> d_sigma{};
};

SymmetricData symmetric_data(const ConeVector& lambda, bool with_gradient) {
  SymmetricData data;
  const int n = lambda.size();
  const auto entries = lambda.entries().span();
  symmetric_sums(entries, -1, std::span<double>(data.sigma.data(), static_cast<std::size_t>(n + 1)));
  if (with_gradient) {
    std::array<double, kMaxDim + 1> reduced{};
    for (int i = 0; i < n; ++i) {
      symmetric_sums(entries, i, std::span<double>(reduced.data(), static_cast<std::size_t>(n + 1)));
      auto& row = data.d_sigma[static_cast<std::size_t>(i)];
      row[0] = 0.0;
      for (int k = 1; k <= n; ++k) row[static_cast<std::size_t>(k)] = reduced[static_cast<std::size_t>(k - 1)];
    }
  }
  return data;
}

}  // namespace

ConeVector::ConeVector(std::span<const double> entries) : entries_(entries) {
  if (entries.empty()) throw ConeViolation("cone vector must have at least one entry", 0.0);
  if (!admissible(entries)) {
    std::ostringstream msg;
    msg << "cone violation: entries must exceed " << cone_floor(entries) << ", minimum entry is "
        << min_entry();
    throw ConeViolation(msg.str(), min_entry());
  }
}

ConeVector::ConeVector(const SmallVector& entries) : ConeVector(entries.span()) {}

ConeVector::ConeVector(std::initializer_list<double> entries)
    : ConeVector(std::span<const double>(entries.begin(), entries.size())) {}

double ConeVector::min_entry() const noexcept {
  double m = entries_[0];
  for (int i = 1; i < entries_.size(); ++i) m = std::min(m, entries_[i]);
  return m;
}

bool ConeVector::admissible(std::span<const double> entries) noexcept {
  const double floor = cone_floor(entries);
  for (double v : entries) {
    if (!(v > floor) || !std::isfinite(v)) return false;
  }
  return true;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return b;
}

void elementary_symmetric(std::span<const double> lambda, std::span<double> out) {
  if (out.size() < lambda.size() + 1) throw IndexError("elementary_symmetric: output too short");
  symmetric_sums(lambda, -1, out.first(lambda.size() + 1));
}

SymmetricPolynomial sigma_k(const ConeVector& lambda, int k) {
  const int n = lambda.size();
  if (k < 0 || k > n) {
    throw IndexError("sigma_k: k = " + std::to_string(k) + " outside [0, " + std::to_string(n) + "]");
  }
  const SymmetricData data = symmetric_data(lambda, false);
  const double raw = data.sigma[static_cast<std::size_t>(k)];
  return {raw, raw / binomial(n, k)};
}

CurvatureFunction::CurvatureFunction(FamilyKind family, int n, int index)
    : family_(family), n_(n), index_(index) {
  if (n < 1 || n > kMaxDim) throw IndexError("curvature function: dimension must be in [1, 8]");
  switch (family) {
    case FamilyKind::kRoot:
      if (index < 1 || index > n) throw IndexError("root family: need 1 <= k <= n");
      break;
    case FamilyKind::kQuotient:
    case FamilyKind::kCombined:
      if (index < 0 || index >= n) throw IndexError("quotient family: need 0 <= l < n");
      break;
  }
}

CurvatureFunction CurvatureFunction::root(int n, int k) { return {FamilyKind::kRoot, n, k}; }
CurvatureFunction CurvatureFunction::quotient(int n, int l) { return {FamilyKind::kQuotient, n, l}; }
CurvatureFunction CurvatureFunction::combined(int n, int l) { return {FamilyKind::kCombined, n, l}; }

CurvatureFunction CurvatureFunction::from_name(const std::string& family, int n, int index) {
  if (family == "root") return root(n, index);
  if (family == "quotient") return quotient(n, index);
  if (family == "combined") return combined(n, index);
  throw IndexError("unknown curvature family '" + family + "' (expected root, quotient or combined)");
}

CurvatureFunction CurvatureFunction::scaled(double factor) const {
  CurvatureFunction copy = *this;
  copy.scale_ *= factor;
  return copy;
}

std::string CurvatureFunction::name() const {
  std::ostringstream s;
  switch (family_) {
    case FamilyKind::kRoot: s << "root(n=" << n_ << ",k=" << index_ << ")"; break;
    case FamilyKind::kQuotient: s << "quotient(n=" << n_ << ",l=" << index_ << ")"; break;
    case FamilyKind::kCombined: s << "combined(n=" << n_ << ",l=" << index_ << ")"; break;
  }
  if (scale_ != 1.0) s << "*" << scale_;
  return s.str();
}

CurvatureEvaluation CurvatureFunction::evaluate(const ConeVector& lambda) const {
  if (lambda.size() != n_) throw IndexError("curvature function: dimension mismatch");
  const SymmetricData data = symmetric_data(lambda, true);
  const auto& sigma = data.sigma;
  const auto nn = static_cast<std::size_t>(n_);

  CurvatureEvaluation out{0.0, SmallVector(n_)};
  auto root_part = [&](int k, double weight) {
    const auto kk = static_cast<std::size_t>(k);
    const double hk = sigma[kk] / binomial(n_, k);
    const double value = std::pow(hk, 1.0 / k);
    out.value += weight * value;
    for (int i = 0; i < n_; ++i) {
      out.gradient[i] += weight * value / k * data.d_sigma[static_cast<std::size_t>(i)][kk] / sigma[kk];
    }
  };
  auto quotient_part = [&](int l, double weight) {
    const auto ll = static_cast<std::size_t>(l);
    const double ratio = (sigma[nn] / sigma[ll]) * (binomial(n_, l) / binomial(n_, n_));
    const double exponent = 1.0 / (n_ - l);
    const double value = std::pow(ratio, exponent);
    out.value += weight * value;
    for (int i = 0; i < n_; ++i) {
      const auto& ds = data.d_sigma[static_cast<std::size_t>(i)];
      const double log_derivative = ds[nn] / sigma[nn] - (l == 0 ? 0.0 : ds[ll] / sigma[ll]);
      out.gradient[i] += weight * value * exponent * log_derivative;
    }
  };

  switch (family_) {
    case FamilyKind::kRoot: root_part(index_, 1.0); break;
    case FamilyKind::kQuotient: quotient_part(index_, 1.0); break;
    case FamilyKind::kCombined:
      root_part(n_, 0.5);
      quotient_part(index_, 0.5);
      break;
  }
  if (scale_ != 1.0) {
    out.value *= scale_;
    for (int i = 0; i < n_; ++i) out.gradient[i] *= scale_;
  }
  return out;
}

double CurvatureFunction::value(const ConeVector& lambda) const { return evaluate(lambda).value; }

SmallVector CurvatureFunction::gradient(const ConeVector& lambda) const {
  return evaluate(lambda).gradient;
}

double eval_f(const CurvatureFunction& f, const ConeVector& lambda) { return f.value(lambda); }

SmallVector grad_f(const CurvatureFunction& f, const ConeVector& lambda) { return f.gradient(lambda); }

bool StructureReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const StructureCheck& c) { return c.passed; });
}

const StructureCheck& StructureReport::row(const std::string& condition) const {
  for (const auto& c : checks)
    if (c.condition == condition) return c;
  throw IndexError("no structure row '" + condition + "'");
}

std::string StructureReport::to_text() const {
  std::ostringstream s;
  s << "structure report for " << family << " (" << samples << " samples, seed " << seed << ")\n";
  for (const auto& c : checks) {
    s << "  (" << c.condition << ") " << (c.passed ? "PASS" : "FAIL") << "  " << c.description
      << "  worst=" << c.worst;
    if (!c.detail.empty()) s << "  [" << c.detail << "]";
    s << "\n";
  }
  return s.str();
}

StructureReport check_structure(const CurvatureFunction& f, int sample_count, std::uint64_t seed,
                                const StructureOptions& options) {
  if (sample_count < 1) throw IndexError("check_structure: sample_count must be >= 1");
  const int n = f.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_entry(std::log(options.sample_lo), std::log(options.sample_hi));
  auto draw = [&] {
    SmallVector v(n);
    for (int i = 0; i < n; ++i) v[i] = options.sample_scale * std::exp(log_entry(rng));
    return v;
  };

  StructureReport report;
  report.family = f.name();
  report.samples = sample_count;
  report.seed = seed;

  double min_gradient = std::numeric_limits<double>::infinity();
  double min_concavity = std::numeric_limits<double>::infinity();
  double min_value = std::numeric_limits<double>::infinity();
  double worst_boundary_ratio = 0.0;
  bool boundary_monotone = true;
  double worst_homogeneity = 0.0;
  constexpr std::array<double, 3> kScales{0.5, 2.0, 10.0};
  constexpr std::array<double, 5> kShrink{1e-2, 1e-4, 1e-6, 1e-8, 1e-10};

  for (int s = 0; s < sample_count; ++s) {
    const SmallVector lam = draw();
    const SmallVector mu = draw();
    const ConeVector cl(lam);
    const CurvatureEvaluation ev = f.evaluate(cl);
    min_value = std::min(min_value, ev.value);
    for (int i = 0; i < n; ++i) min_gradient = std::min(min_gradient, ev.gradient[i]);

    SmallVector mid(n);
    for (int i = 0; i < n; ++i) mid[i] = 0.5 * (lam[i] + mu[i]);
    const double slack = f.value(ConeVector(mid)) - 0.5 * (ev.value + f.value(ConeVector(mu)));
    min_concavity = std::min(min_concavity, slack);

    for (double t : kScales) {
      SmallVector scaled(n);
      for (int i = 0; i < n; ++i) scaled[i] = t * lam[i];
      const double err = std::abs(f.value(ConeVector(scaled)) - t * ev.value) / (t * ev.value);
      worst_homogeneity = std::max(worst_homogeneity, err);
    }

    // Ray toward the cone boundary: shrink the smallest entry.
    int arg_min = 0;
    for (int i = 1; i < n; ++i)
      if (lam[i] < lam[arg_min]) arg_min = i;
    double previous = ev.value;
    for (double shrink : kShrink) {
      SmallVector near = lam;
      near[arg_min] *= shrink;
      const double v = f.value(ConeVector(near));
      if (!(v < previous)) boundary_monotone = false;
      previous = v;
    }
    worst_boundary_ratio = std::max(worst_boundary_ratio, previous / ev.value);
  }

  report.checks.push_back({"gradient", "f_i > 0 on the cone", min_gradient > 0.0, min_gradient,
                           "min gradient entry over samples"});
  report.checks.push_back({"concavity", "midpoint concavity", min_concavity >= options.concavity_slack,
                           min_concavity, "min f((l+m)/2) - (f(l)+f(m))/2"});
  {
    constexpr double kVanishRatio = 0.1;
    const bool ok = min_value > 0.0 && boundary_monotone && worst_boundary_ratio <= kVanishRatio;
    std::ostringstream d;
    d << "min f=" << min_value << ", f(lambda_min*1e-10)/f(lambda) <= " << kVanishRatio
      << (boundary_monotone ? "" : ", non-monotone along boundary ray");
    report.checks.push_back({"boundary", "f > 0 inside, f -> 0 at the cone boundary", ok, worst_boundary_ratio, d.str()});
  }
  {
    const double unit = f.value(ConeVector(SmallVector(n, 1.0)));
    report.checks.push_back({"normalization", "f(1,...,1) = 1", std::abs(unit - 1.0) <= 1e-13, unit - 1.0, ""});
  }
  report.checks.push_back({"homogeneity", "degree-one homogeneity", worst_homogeneity <= options.homogeneity_rel_tol,
                           worst_homogeneity, "t in {0.5, 2, 10}"});
  {
    double best = 0.0;
    double reached_at = 0.0;
    for (double r : {1.0, 10.0, 100.0, 1000.0, 10000.0}) {
      SmallVector probe(n, 1.0);
      probe[n - 1] += r;
      const double v = f.value(ConeVector(probe));
      if (v > best) best = v;
      if (reached_at == 0.0 && v >= options.growth_target) reached_at = r;
    }
    std::ostringstream d;
    d << "target C=" << options.growth_target << ", base (1,...,1), ladder R=1..1e4";
    if (reached_at > 0.0) {
      d << ", reached at R=" << reached_at;
    } else {
      d << ", unbounded-growth-fails";
    }
    report.checks.push_back({"growth", "growth ladder f(l', l_n + R) >= C", reached_at > 0.0, best, d.str()});
  }
  return report;
}

}  // namespace curveflow
