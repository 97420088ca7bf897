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
#include <limits>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "defedavg/algorithms.hpp"
#include "defedavg/fl_core.hpp"
#include "defedavg/problems.hpp"
#include "defedavg/weights.hpp"

namespace defedavg {

double compute_time(double speed_factor, std::size_t K, double flops_per_iter, double c_mac);
double comm_time(double model_bytes, double bandwidth_bits_per_s);

struct SystemModel {
  double c_mac = 10e9;
  double flops_per_iter = 0.0;  // 0: analytic count from the problem
  double model_bytes = 0.0;     // 0: 8 bytes per parameter
  double bandwidth_down = 400e6;
  double bandwidth_up = 400e6;
  double speed_min = 1.0;
  double speed_max = 5.0;
  // Explicit per-client factors; otherwise drawn from U[speed_min, speed_max].
  std::vector<double> speed_factors;
};

// continuous: clients retrain whenever idle with a model in the receive
// buffer. synchronous: fetching consumes the buffer and the server discards
// updates older than the current round, so every round runs on fresh models.
enum class ClientMode { continuous, synchronous };

std::string_view to_string(ClientMode mode);
std::optional<ClientMode> parse_client_mode(std::string_view text);

struct RunConfig {
  Policy policy;
  ProblemPtr problem;
  std::size_t T = 1;
  std::size_t batch = 10;
  std::uint64_t root_seed = 0;
  SystemModel system;
  ClientMode client_mode = ClientMode::continuous;
  std::size_t eval_every = 1;
  double max_sim_time = std::numeric_limits<double>::infinity();
  std::optional<double> target_grad_norm_sq;
  std::optional<double> target_accuracy;
  bool stop_at_target = false;
  bool record_trace = false;
  std::optional<Weights> initial_weights;  // default: problem->initial_weights()
};

void validate_run_config(const RunConfig& config);

struct MetricsRow {
  std::size_t round = 0;
  double wall_clock = 0.0;
  double train_loss = 0.0;
  double grad_norm_sq = 0.0;
  std::optional<double> test_accuracy;
  double mean_staleness = 0.0;  // over rounds since the previous row
  std::size_t max_staleness = 0;
};

enum class TraceKind {
  broadcast_arrive,
  training_start,
  training_done,
  upload_start,
  upload_arrive,
  round_complete
};

struct TraceEvent {
  double time = 0.0;
  TraceKind kind = TraceKind::broadcast_arrive;
  std::size_t client = 0;  // unused for round_complete
  std::size_t round = 0;   // model round involved (new round for round_complete)
};

struct RunCounters {
  std::size_t events = 0;
  std::size_t trainings = 0;
  std::size_t uploads = 0;
  std::size_t stale_broadcasts = 0;
  std::size_t dropped_updates = 0;
  std::size_t discarded_stale_updates = 0;
};

struct RunResult {
  std::size_t num_clients = 0;
  std::vector<MetricsRow> rows;
  std::vector<std::vector<Participation>> participation_log;
  std::map<std::size_t, std::size_t> staleness_histogram;
  Weights final_weights;
  std::vector<double> round_end_times;  // simulated time at which round t+1 was formed
  std::vector<double> speed_factors;
  RunCounters counters;
  std::vector<TraceEvent> trace;
  std::size_t rounds_completed = 0;
  bool stopped_early = false;  // target or time limit hit before T
  std::optional<std::size_t> rounds_to_target;
  std::optional<double> time_to_target;
};

/// Runs the event loop. Throws SimulationError on invalid configs and when
/// the event queue empties before T rounds.
RunResult run(const RunConfig& config);

struct StalenessReport {
  std::size_t max_staleness = 0;  // lambda-hat
  double mean_staleness = 0.0;
  std::size_t samples = 0;
  std::map<std::size_t, std::size_t> histogram;
  std::vector<std::size_t> per_client_max;
  bool causal = true;  // every base_round <= its round
};

StalenessReport staleness_report(const RunResult& result);

}  // namespace defedavg
