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

#include "defedavg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "defedavg/error.hpp"

namespace defedavg {

Weights finite_difference_gradient(const LossFn& loss_fn, const Weights& w, double h) {
  if (!(h > 0.0)) throw NumericError("finite_difference_gradient: step h must be positive");
  Weights grad(w.dim());
  Weights probe = w;
  for (std::size_t j = 0; j < w.dim(); ++j) {
    const double original = probe[j];
    probe[j] = original + h;
    const double forward = loss_fn(probe);
    probe[j] = original - h;
    const double backward = loss_fn(probe);
    probe[j] = original;
    if (!std::isfinite(forward) || !std::isfinite(backward)) {
      throw NumericError("finite_difference_gradient: non-finite loss probing component " +
                         std::to_string(j));
    }
    grad[j] = (forward - backward) / (2.0 * h);
  }
  return grad;
}

double relative_l2_error(const Weights& a, const Weights& b) {
  const double diff = (a - b).norm();
  return diff / std::max(b.norm(), 1e-300);
}

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningStats::variance() const noexcept {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::standard_error() const noexcept {
  return n_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

VectorStats::VectorStats(std::size_t dim) : mean_(dim), m2_(dim) {}

void VectorStats::add(const Weights& x) {
  require_same_dim(mean_, x, "VectorStats::add");
  ++n_;
  const double inv = 1.0 / static_cast<double>(n_);
  for (std::size_t j = 0; j < x.dim(); ++j) {
    const double delta = x[j] - mean_[j];
    mean_[j] += delta * inv;
    m2_[j] += delta * (x[j] - mean_[j]);
  }
}

Weights VectorStats::standard_error() const {
  Weights se(mean_.dim());
  if (n_ < 2) return se;
  const double n = static_cast<double>(n_);
  for (std::size_t j = 0; j < se.dim(); ++j) se[j] = std::sqrt(m2_[j] / (n - 1.0) / n);
  return se;
}

}  // namespace defedavg
