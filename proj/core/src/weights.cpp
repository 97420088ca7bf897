/*
 * Copyright 2026 The defedavg-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "defedavg/weights.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "defedavg/error.hpp"

namespace defedavg {

void require_same_dim(const Weights& a, const Weights& b, std::string_view context) {
  if (a.dim() != b.dim()) {
    throw NumericError(std::string(context) + ": dimension mismatch (" +
                       std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

Weights& Weights::axpy(double alpha, const Weights& x) {
  require_same_dim(*this, x, "axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * x.values_[i];
  return *this;
}

Weights& Weights::operator+=(const Weights& x) {
  require_same_dim(*this, x, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += x.values_[i];
  return *this;
}

Weights& Weights::operator-=(const Weights& x) {
  require_same_dim(*this, x, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= x.values_[i];
  return *this;
}

Weights& Weights::operator*=(double alpha) {
  for (double& v : values_) v *= alpha;
  return *this;
}

double Weights::dot(const Weights& x) const {
  require_same_dim(*this, x, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * x.values_[i];
  return s;
}

double Weights::norm_sq() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

double Weights::norm() const { return std::sqrt(norm_sq()); }

bool Weights::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Weights::require_finite(std::string_view context) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericError(std::string(context) + ": non-finite value at component " +
                         std::to_string(i));
    }
  }
}

Weights operator+(Weights a, const Weights& b) { return a += b; }
Weights operator-(Weights a, const Weights& b) { return a -= b; }
Weights operator*(double alpha, Weights a) { return a *= alpha; }

double max_abs_diff(const Weights& a, const Weights& b) {
  require_same_dim(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace defedavg
