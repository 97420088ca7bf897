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
#include <optional>
#include <string>
#include <vector>

#include "defedavg/config.hpp"

namespace defedavg {

struct SweepCell {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> rounds_to_target;  // nullopt: unreached within T
  std::optional<double> time_to_target;
};

struct SweepSummary {
  std::size_t n = 0;
  std::size_t reached = 0;
  std::size_t runs = 0;
  // Means over seeds; nullopt unless every seed reached the target.
  std::optional<double> mean_rounds;
  std::optional<double> mean_time;
};

/// Runs every (n, seed) cell of `base` until its target is met or T rounds
/// pass. Cells run on up to `threads` workers; the result is sorted by
/// (n, seed) so it does not depend on scheduling.
std::vector<SweepCell> sweep(const ExperimentConfig& base, const std::vector<std::size_t>& n_values,
                             const std::vector<std::uint64_t>& seeds, std::size_t threads = 1);

std::vector<SweepSummary> summarize(const std::vector<SweepCell>& cells);

/// `n,seed,rounds_to_target,time_to_target` rows followed by one
/// `n,mean,...` row per n. Unreached cells read "unreached".
std::string sweep_csv(const std::vector<SweepCell>& cells);

}  // namespace defedavg
