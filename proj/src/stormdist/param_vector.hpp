// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace stormdist {

/// Dense real vector used for iterates, directions and gradients.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  ParamVector(std::initializer_list<double> init) : values_(init) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept;

  /// Bitwise equality, distinguishes +0/-0 and compares NaN payloads.
  bool bitwise_equal(const ParamVector& other) const noexcept;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

double dot(const ParamVector& a, const ParamVector& b);
double squared_norm(const ParamVector& v);
double norm(const ParamVector& v);

ParamVector operator+(const ParamVector& a, const ParamVector& b);
ParamVector operator-(const ParamVector& a, const ParamVector& b);
ParamVector operator*(double s, const ParamVector& v);

/// y += alpha * x
void axpy(double alpha, const ParamVector& x, ParamVector& y);

/// Throws ContractViolation when the lengths differ.
void require_same_size(const ParamVector& a, const ParamVector& b, const char* what);

/// Throws ContractViolation when any entry is NaN or infinite.
void require_finite(const ParamVector& v, const char* what);

}  // namespace stormdist
