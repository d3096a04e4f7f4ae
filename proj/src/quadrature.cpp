#include "cvent/quadrature.hpp"

namespace cvent {

std::string to_string(CovarianceViolation::Kind kind) {
  switch (kind) {
    case CovarianceViolation::Kind::kNotSymmetric:
      return "not symmetric";
    case CovarianceViolation::Kind::kNotPositiveDefinite:
      return "not positive definite";
    case CovarianceViolation::Kind::kUncertaintyBound:
      return "violates uncertainty bound";
    case CovarianceViolation::Kind::kNonFinite:
      return "non-finite entries";
  }
  return "unknown";
}

}  // namespace cvent
