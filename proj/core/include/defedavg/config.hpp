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
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "defedavg/dataset.hpp"
#include "defedavg/problems.hpp"
#include "defedavg/simulator.hpp"
#include "defedavg/theory.hpp"

namespace defedavg {

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  std::size_t clients = 100;
  std::optional<std::uint64_t> seed;  // defaults to run.seed

  // quadratic
  std::size_t dim = 10;
  double hetero_nu = 0.0;
  double sigma = 1.0;
  double initial_gap = 1.0;
  std::optional<double> G;  // gradient bound used by the rate formulas

  // logreg / mlp
  std::string dataset = "synthetic";  // synthetic | fashionmnist | idx
  std::string images, labels, test_images, test_labels;
  std::size_t samples = 0;  // 0: dataset default (synthetic) or all rows (idx)
  SyntheticSpec synthetic;
  PartitionScheme partition = PartitionScheme::iid;
  double l2 = 0.0;
  std::size_t hidden = 16;
};

enum class RateSource { manual, preset, theorem, theorem_local };

struct ExperimentConfig {
  ProblemSpec problem;
  Policy policy;
  ClientMode client_mode = ClientMode::continuous;
  RateSource rate_source = RateSource::manual;
  std::optional<std::string> preset;
  std::optional<double> lambda;  // delay bound for the rate conditions
  std::string system_preset = "analytic";
  SystemModel system;

  std::size_t T = 0;
  std::size_t batch = 10;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  double max_sim_time = std::numeric_limits<double>::infinity();
  std::optional<double> target_grad_norm_sq;
  std::optional<double> target_accuracy;
};

/// Parses the sectioned key = value format. Throws ConfigError (with line
/// numbers where one applies) on unknown sections or keys, malformed values,
/// violated constraints and missing required keys.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Replaces eta / eta_bar with a named preset cell. Throws ConfigError.
void apply_preset(ExperimentConfig& config, std::string_view name);

/// Builds the problem instance the config describes.
ProblemPtr build_problem(const ExperimentConfig& config);

/// Problem constants for the rate formulas: exact where the problem knows
/// them, estimated otherwise.
ProblemConstants problem_constants(const ExperimentConfig& config, const Problem& problem);

/// lambda used in the step-size conditions: config value, else the
/// heuristic high-probability bound at delta = 0.01.
double rate_lambda(const ExperimentConfig& config);

/// Resolves rates and builds the simulator config.
RunConfig to_run_config(const ExperimentConfig& config);

}  // namespace defedavg
