#pragma once

#include <stdexcept>
#include <string>

namespace gaze_attn {

/// Malformed, inconsistent or numerically invalid input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an operation's precondition (bad arguments, bad config).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace gaze_attn
