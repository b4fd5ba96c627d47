#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace curveflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An index argument (e.g. the k of sigma_k) is outside its admissible range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A vector or spectrum left the positive cone.
class ConeViolation : public Error {
 public:
  ConeViolation(const std::string& what, double min_entry)
      : Error(what), min_entry_(min_entry) {}

  double min_entry() const noexcept { return min_entry_; }

 private:
  double min_entry_;
};

/// Invalid configuration value (non-positive axis, bad mu, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A query point lies outside the closed domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// API misuse that is not a configuration problem (too few states, wrong domain kind).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Text input that could not be parsed; carries the offending line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// One violated hypothesis together with the sample point that witnesses it.
struct HypothesisViolation {
  std::string hypothesis;
  std::string witness;
};

/// Forcing data or initial data fails a hypothesis of the existence theorem.
class HypothesisError : public Error {
 public:
  explicit HypothesisError(std::vector<HypothesisViolation> violations);

  const std::vector<HypothesisViolation>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<HypothesisViolation> violations_;
};

/// The discrete flow left the convex cone and step halving could not recover.
class FlowBreakdown : public Error {
 public:
  FlowBreakdown(const std::string& what, int node, std::vector<double> spectrum)
      : Error(what), node_(node), spectrum_(std::move(spectrum)) {}

  int node() const noexcept { return node_; }
  const std::vector<double>& spectrum() const noexcept { return spectrum_; }

 private:
  int node_;
  std::vector<double> spectrum_;
};

}  // namespace curveflow
