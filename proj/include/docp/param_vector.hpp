#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "docp/error.hpp"

namespace docp {

/// Flat vector of optimization variables. Non-empty and finite by construction.
class ParamVector {
 public:
  ParamVector() = default;

  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {
    detail::require(!values_.empty(), "ParamVector: dim must be >= 1");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw NumericError("ParamVector: non-finite entry at index " + std::to_string(i));
      }
    }
  }

  ParamVector(std::initializer_list<double> values) : ParamVector(std::vector<double>(values)) {}

  static ParamVector zeros(std::size_t dim) { return ParamVector(std::vector<double>(dim, 0.0)); }
  static ParamVector filled(std::size_t dim, double value) {
    return ParamVector(std::vector<double>(dim, value));
  }

  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size(), "dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

inline bool all_finite(std::span<const double> a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace docp
