#include "curveflow/errors.hpp"

#include <sstream>

namespace curveflow {

namespace {

std::string describe(const std::vector<HypothesisViolation>& violations) {
  std::ostringstream out;
  out << violations.size() << " hypothesis violation(s)";
  for (const auto& v : violations) out << "\n  " << v.hypothesis << " (witness: " << v.witness << ")";
  return out.str();
}

}  // namespace

HypothesisError::HypothesisError(std::vector<HypothesisViolation> violations)
    : Error(describe(violations)), violations_(std::move(violations)) {}

}  // namespace curveflow
