// SPDX-License-Identifier: Apache-2.0
#include "stormdist/param_vector.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "stormdist/errors.hpp"

namespace stormdist {

bool ParamVector::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool ParamVector::bitwise_equal(const ParamVector& other) const noexcept {
  return size() == other.size() &&
         (size() == 0 || std::memcmp(data(), other.data(), size() * sizeof(double)) == 0);
}

void require_same_size(const ParamVector& a, const ParamVector& b, const char* what) {
  if (a.size() != b.size()) {
    throw ContractViolation(std::string(what) + ": dimension mismatch (" +
                            std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

void require_finite(const ParamVector& v, const char* what) {
  if (!v.all_finite()) throw ContractViolation(std::string(what) + ": non-finite entry");
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(const ParamVector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

double norm(const ParamVector& v) { return std::sqrt(squared_norm(v)); }

ParamVector operator+(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "operator+");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

ParamVector operator-(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "operator-");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

ParamVector operator*(double s, const ParamVector& v) {
  ParamVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
  return out;
}

void axpy(double alpha, const ParamVector& x, ParamVector& y) {
  require_same_size(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace stormdist
