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
#include <string>
#include <vector>

#include "defedavg/problems.hpp"
#include "defedavg/rng.hpp"
#include "defedavg/weights.hpp"

namespace defedavg {

struct ProblemConstants {
  double L = 1.0;
  double sigma = 0.0;
  double G = 0.0;
  double nu = 0.0;
  double gap = 0.0;  // F(w0) - F*
};

struct RateCondition {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct RatePlan {
  double eta = 0.0;
  double eta_bar = 0.0;
  bool conditions_satisfied = false;
  std::string binding_constraint;  // violated (or tightest) condition
  double bound_at_T = 0.0;         // predicted bound on the average ||grad F||^2
  std::vector<RateCondition> conditions;
};

/// Rates, step-size conditions and bound for the non-IID algorithm.
/// Throws NumericError if gap < 0, L <= 0, or 4 sigma^2 L + 2 L K G^2 = 0.
RatePlan niid_rates(std::size_t n, std::size_t K, const ProblemConstants& c, std::size_t T,
                    double lambda);

/// Same for the IID algorithm. Throws NumericError if gap < 0, L <= 0 or sigma = 0.
RatePlan iid_rates(std::size_t n, std::size_t K, const ProblemConstants& c, std::size_t T,
                   double lambda);

/// Per-round inclusion probability 1 - ((N-1)/N)^n.
double inclusion_probability(std::size_t N, std::size_t n);

/// Heuristic high-probability delay bound ceil((1/p)(1 + ln(N T / delta))),
/// big-O constant fixed at 1. Requires 0 < delta < 1.
std::size_t lambda_bound(std::size_t N, std::size_t n, std::size_t T, double delta);

struct ConstantEstimates {
  ProblemConstants constants;  // empirical estimates, not certified bounds
  bool gap_is_exact = false;   // gap from a known optimum rather than F(w0) - 0
};

/// sigma^2 = max sample E||g - grad F_i||^2, G^2 = max ||grad F_i||^2,
/// nu^2 = max ||grad F_i - grad F||^2 and L = max secant ratio, over probe
/// points spread around the initial weights.
ConstantEstimates estimate_constants(const Problem& problem, std::size_t probe_points,
                                     std::size_t samples_per_point, RngStream& rng,
                                     std::size_t batch = 10, double probe_scale = 1.0);

using MultisetSampler =
    std::function<std::vector<std::size_t>(std::size_t N, std::size_t n, RngStream& rng)>;

struct UnbiasednessReport {
  Weights mc_mean;
  Weights exact_mean;
  Weights standard_error;
  double max_z = 0.0;  // max_j |mc_j - exact_j| / se_j
  bool passed = false;
};

/// Monte-Carlo mean of (1/n) sum_{j in I} delta_j over resampled multisets I
/// against (1/N) sum_i delta_i, 4-SE band per component. `sampler` defaults
/// to sample_with_replacement.
UnbiasednessReport mc_unbiasedness_check(const std::vector<Weights>& deltas, std::size_t n,
                                         std::size_t trials, RngStream& rng,
                                         const MultisetSampler& sampler = {});

// independent: every draw of the multiset gets its own noise.
// shared_duplicates: a client drawn m times trains once and counts m times.
enum class NoiseSharing { independent, shared_duplicates };

struct VarianceReport {
  double empirical = 0.0;
  double standard_error = 0.0;
  double reference = 0.0;   // exact expectation under the sharing mode
  double stated_bound = 0.0;  // 2 n K sigma^2
  bool within_reference = false;
  bool below_bound = false;
  bool passed = false;
  bool trivial = false;  // sigma = 0
};

/// E|| sum_{j in I} sum_k (g_j^k - grad F_j(w_j^k)) ||^2 on a problem with exact sigma.
VarianceReport mc_variance_check(const Problem& problem, std::size_t n, std::size_t K,
                                 std::size_t trials, RngStream& rng, double eta_bar = 0.01,
                                 NoiseSharing sharing = NoiseSharing::independent);

}  // namespace defedavg
