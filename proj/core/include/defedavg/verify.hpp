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
#include <string>
#include <vector>

#include "defedavg/problems.hpp"
#include "defedavg/rng.hpp"

namespace defedavg {

struct GradCheckReport {
  std::size_t probes = 0;
  double max_relative_error = 0.0;
};

/// Compares analytic gradients with central differences (step h) at
/// `probes` random points. Data problems are probed on random mini-batches
/// of `batch` samples; other problems on a random client objective.
GradCheckReport gradient_check(const Problem& problem, std::size_t probes, std::size_t batch,
                               double h, RngStream& rng, double weight_scale = 0.5);

struct VerifyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Self-contained invariant suite on synthetic problems: sampling
/// unbiasedness (with a biased negative control), the variance identity,
/// the synchronous and single-step reductions, compact-recursion
/// equivalence, gradient checks and staleness causality.
std::vector<VerifyResult> run_verify_suite(std::uint64_t seed = 1);

}  // namespace defedavg
