#pragma once

#include <stdexcept>
#include <string>

namespace cvent {

/// Invalid input: violated precondition, bad config field, malformed file.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a meaningful result (singular system,
/// non-finite model output, failed convergence where a result is required).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace cvent
