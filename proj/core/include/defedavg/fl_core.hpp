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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "defedavg/problems.hpp"
#include "defedavg/rng.hpp"
#include "defedavg/weights.hpp"

namespace defedavg {

/// A global model tagged with the round that produced it.
struct StampedModel {
  std::size_t round = 0;
  std::shared_ptr<const Weights> weights;
};

StampedModel make_stamped(std::size_t round, Weights weights);

/// Result of K local SGD steps. delta = base_weights - final iterate.
struct LocalUpdate {
  std::size_t client_id = 0;
  std::size_t base_round = 0;
  Weights delta;
  std::size_t steps = 0;
  std::string stream_label;  // RNG stream that drove the mini-batches
};

enum class SendPolicy { always_overwrite, overwrite_on_select };

std::string_view to_string(SendPolicy policy);
std::optional<SendPolicy> parse_send_policy(std::string_view text);

struct ClientState {
  std::size_t id = 0;
  double speed_factor = 1.0;
  std::optional<StampedModel> receive_buffer;
  std::optional<LocalUpdate> send_buffer;
  double busy_until = 0.0;
  std::optional<StampedModel> training_base;

  // Event counters surfaced in run metrics.
  std::size_t stale_broadcasts = 0;
  std::size_t dropped_updates = 0;
};

struct Participation {
  std::size_t client_id = 0;
  std::size_t base_round = 0;
  std::string stream_label;
};

struct ServerState {
  std::size_t round = 0;
  Weights weights;
  double eta = 1.0;
  // participation_log[t] lists the updates aggregated in round t, in order.
  std::vector<std::vector<Participation>> participation_log;
};

/// Stream label used for one local training run. `rep` counts repeated
/// trainings of the same client from the same base model.
std::string training_stream_label(std::size_t client, std::size_t base_round, std::size_t rep);

/// K steps of w <- w - eta_bar * g(w) from base.weights. When `gradients` is
/// non-null the stochastic gradients are appended to it, in step order.
LocalUpdate local_train(const StampedModel& base, std::size_t K, double eta_bar,
                        const Problem& problem, std::size_t client, std::size_t batch,
                        RngStream& rng, std::vector<Weights>* gradients = nullptr);

/// (1/n) sum of the deltas, summed in list order. Duplicated clients count
/// once per occurrence.
Weights aggregate(const std::vector<LocalUpdate>& updates, std::size_t n);
Weights aggregate(const std::vector<const LocalUpdate*>& updates, std::size_t n);

/// w <- w - eta * delta_mean, round + 1.
ServerState global_step(ServerState server, const Weights& delta_mean);

/// Overwrites the receive buffer unless `model` is older than its content,
/// in which case the broadcast is dropped and counted.
ClientState deposit_receive(ClientState client, StampedModel model);

ClientState deposit_send(ClientState client, LocalUpdate update, SendPolicy policy);

}  // namespace defedavg
