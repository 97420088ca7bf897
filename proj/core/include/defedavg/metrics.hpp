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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "defedavg/simulator.hpp"

namespace defedavg {

inline constexpr std::string_view kMetricsHeader =
    "round,wall_clock_s,train_loss,grad_norm_sq,test_acc,mean_staleness,max_staleness";

// Shortest text with 17 significant digits; parses back to the same double.
std::string format_double(double v);

std::string metrics_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const RunResult& result, const std::filesystem::path& path);

/// Inverse of metrics_csv. Throws DataError on a malformed document.
std::vector<MetricsRow> parse_metrics_csv(std::string_view text);

// Writes `text` to `path`, throwing Error on I/O failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace defedavg
