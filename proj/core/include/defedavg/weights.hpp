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

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace defedavg {

/// Dense model vector in R^d.
///
/// A thin value type over `std::vector<double>`. Arithmetic helpers check
/// dimensions; `require_finite` is the hard finiteness gate used after every
/// state transition that produces new weights.
class Weights {
 public:
  Weights() = default;
  explicit Weights(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit Weights(std::vector<double> values) : values_(std::move(values)) {}
  Weights(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  // this += alpha * x
  Weights& axpy(double alpha, const Weights& x);
  Weights& operator+=(const Weights& x);
  Weights& operator-=(const Weights& x);
  Weights& operator*=(double alpha);

  double dot(const Weights& x) const;
  double norm_sq() const;
  double norm() const;
  bool all_finite() const noexcept;

  // Throws NumericError naming `context` and the first offending component.
  void require_finite(std::string_view context) const;

  friend bool operator==(const Weights&, const Weights&) = default;

 private:
  std::vector<double> values_;
};

Weights operator+(Weights a, const Weights& b);
Weights operator-(Weights a, const Weights& b);
Weights operator*(double alpha, Weights a);

double max_abs_diff(const Weights& a, const Weights& b);

// Throws NumericError if the dimensions differ.
void require_same_dim(const Weights& a, const Weights& b, std::string_view context);

}  // namespace defedavg
