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

#include "defedavg/fl_core.hpp"

#include <cmath>
#include <string>

#include "defedavg/error.hpp"

namespace defedavg {

StampedModel make_stamped(std::size_t round, Weights weights) {
  return StampedModel{round, std::make_shared<const Weights>(std::move(weights))};
}

std::string_view to_string(SendPolicy policy) {
  return policy == SendPolicy::always_overwrite ? "always_overwrite" : "overwrite_on_select";
}

std::optional<SendPolicy> parse_send_policy(std::string_view text) {
  if (text == "always_overwrite") return SendPolicy::always_overwrite;
  if (text == "overwrite_on_select") return SendPolicy::overwrite_on_select;
  return std::nullopt;
}

std::string training_stream_label(std::size_t client, std::size_t base_round, std::size_t rep) {
  return "train/client/" + std::to_string(client) + "/base/" + std::to_string(base_round) +
         "/rep/" + std::to_string(rep);
}

LocalUpdate local_train(const StampedModel& base, std::size_t K, double eta_bar,
                        const Problem& problem, std::size_t client, std::size_t batch,
                        RngStream& rng, std::vector<Weights>* gradients) {
  if (K == 0) throw SimulationError("local_train: K must be at least 1");
  if (!(eta_bar >= 0.0) || !std::isfinite(eta_bar)) {
    throw SimulationError("local_train: eta_bar must be a finite nonnegative number");
  }
  if (!base.weights) throw SimulationError("local_train: base model has no weights");
  const Weights& w0 = *base.weights;
  Weights w = w0;
  for (std::size_t k = 0; k < K; ++k) {
    Weights g = stochastic_gradient(problem, client, w, batch, rng);
    w.axpy(-eta_bar, g);
    if (!w.all_finite()) {
      throw NumericError("local_train: non-finite iterate at step " + std::to_string(k + 1) +
                         " of client " + std::to_string(client));
    }
    if (gradients) gradients->push_back(std::move(g));
  }
  LocalUpdate out;
  out.client_id = client;
  out.base_round = base.round;
  out.delta = w0 - w;
  out.steps = K;
  out.stream_label = rng.label();
  return out;
}

namespace {

template <class Get>
Weights mean_of(std::size_t count, std::size_t n, Get get) {
  if (count == 0) throw SimulationError("aggregate: no updates");
  if (count != n) {
    throw SimulationError("aggregate: expected " + std::to_string(n) + " updates, got " +
                          std::to_string(count));
  }
  Weights sum(get(0).dim());
  for (std::size_t i = 0; i < count; ++i) {
    const Weights& d = get(i);
    require_same_dim(sum, d, "aggregate");
    sum += d;
  }
  sum *= 1.0 / static_cast<double>(n);
  return sum;
}

}  // namespace

Weights aggregate(const std::vector<LocalUpdate>& updates, std::size_t n) {
  return mean_of(updates.size(), n, [&](std::size_t i) -> const Weights& { return updates[i].delta; });
}

Weights aggregate(const std::vector<const LocalUpdate*>& updates, std::size_t n) {
  return mean_of(updates.size(), n,
                 [&](std::size_t i) -> const Weights& { return updates[i]->delta; });
}

ServerState global_step(ServerState server, const Weights& delta_mean) {
  require_same_dim(server.weights, delta_mean, "global_step");
  server.weights.axpy(-server.eta, delta_mean);
  server.weights.require_finite("global_step at round " + std::to_string(server.round));
  ++server.round;
  return server;
}

ClientState deposit_receive(ClientState client, StampedModel model) {
  if (client.receive_buffer && model.round < client.receive_buffer->round) {
    ++client.stale_broadcasts;
    return client;
  }
  client.receive_buffer = std::move(model);
  return client;
}

ClientState deposit_send(ClientState client, LocalUpdate update, SendPolicy policy) {
  if (client.send_buffer && policy == SendPolicy::overwrite_on_select) {
    ++client.dropped_updates;
    return client;
  }
  client.send_buffer = std::move(update);
  return client;
}

}  // namespace defedavg
