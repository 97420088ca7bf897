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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "defedavg/simulator.hpp"

namespace defedavg {

/// Tuned (eta, eta_bar) for one (algorithm, dataset, n) cell.
/// Names look like "defedavg_iid/fashionmnist/n10".
struct RatePreset {
  std::string name;
  double eta = 0.0;
  double eta_bar = 0.0;
};

const std::vector<RatePreset>& rate_presets();
std::optional<RatePreset> find_rate_preset(std::string_view name);

/// Timing presets: "analytic" (problem-derived FLOPs and 8 bytes per
/// parameter), "fashionmnist" and "cifar10" (per-iteration FLOPs and
/// payload of the reference CNN workloads).
std::optional<SystemModel> system_preset(std::string_view name);

/// Accuracy targets for the reference datasets; iid selects the IID column.
std::optional<double> accuracy_target(std::string_view dataset, bool iid);

}  // namespace defedavg
