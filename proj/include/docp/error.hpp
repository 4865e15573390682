#pragma once

#include <stdexcept>
#include <string>

namespace docp {

/// Raised when a caller breaks a documented precondition (dimension mismatch,
/// invalid configuration, unclipped curvature fed to the moment update, ...).
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a value that must be finite is not. The harness treats this as
/// a divergence signal rather than a programming error.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace detail
}  // namespace docp
