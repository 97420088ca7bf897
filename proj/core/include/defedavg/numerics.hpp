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
#include <cstdint>
#include <functional>

#include "defedavg/rng.hpp"
#include "defedavg/weights.hpp"

namespace defedavg {

using LossFn = std::function<double(const Weights&)>;

/// Central-difference gradient: component j is (f(w + h e_j) - f(w - h e_j)) / 2h.
/// Throws NumericError naming the component when a probe evaluates non-finite.
Weights finite_difference_gradient(const LossFn& loss_fn, const Weights& w, double h);

/// ||a - b|| / max(||b||, tiny). `b` is the reference.
double relative_l2_error(const Weights& a, const Weights& b);

/// Welford accumulator for Monte-Carlo means and standard errors.
class RunningStats {
 public:
  void add(double x);

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  // Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept;
  // Standard error of the mean.
  double standard_error() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Componentwise Welford accumulator over vectors of a fixed dimension.
class VectorStats {
 public:
  explicit VectorStats(std::size_t dim);

  void add(const Weights& x);

  std::size_t count() const noexcept { return n_; }
  const Weights& mean() const noexcept { return mean_; }
  Weights standard_error() const;

 private:
  std::size_t n_ = 0;
  Weights mean_;
  Weights m2_;
};

}  // namespace defedavg
