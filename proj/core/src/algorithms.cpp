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

#include "defedavg/algorithms.hpp"

#include <cmath>
#include <string>

#include "defedavg/error.hpp"

namespace defedavg {

std::string_view to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::fedavg: return "fedavg";
    case AlgorithmKind::defedavg_niid: return "defedavg_niid";
    case AlgorithmKind::defedavg_iid: return "defedavg_iid";
    case AlgorithmKind::fedbuff: return "fedbuff";
    case AlgorithmKind::asysg: return "asysg";
  }
  return "unknown";
}

std::optional<AlgorithmKind> parse_algorithm_kind(std::string_view text) {
  for (auto k : {AlgorithmKind::fedavg, AlgorithmKind::defedavg_niid, AlgorithmKind::defedavg_iid,
                 AlgorithmKind::fedbuff, AlgorithmKind::asysg}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

bool uses_sampling(AlgorithmKind kind) {
  return kind == AlgorithmKind::fedavg || kind == AlgorithmKind::defedavg_niid;
}

void validate_policy(const Policy& policy, std::size_t num_clients) {
  if (policy.n == 0 || policy.n > num_clients) {
    throw SimulationError("policy: n = " + std::to_string(policy.n) + " must lie in [1, N = " +
                          std::to_string(num_clients) + "]");
  }
  if (policy.K == 0) throw SimulationError("policy: K must be at least 1");
  if (!std::isfinite(policy.eta) || policy.eta < 0.0) {
    throw SimulationError("policy: eta must be finite and nonnegative");
  }
  if (!std::isfinite(policy.eta_bar) || policy.eta_bar < 0.0) {
    throw SimulationError("policy: eta_bar must be finite and nonnegative");
  }
  if (policy.kind == AlgorithmKind::asysg && (policy.K != 1 || policy.eta != 1.0)) {
    throw SimulationError("policy: asysg has a single rate; K must be 1 and eta must be 1");
  }
}

Policy asysg_policy(std::size_t n, double rate) {
  Policy p;
  p.kind = AlgorithmKind::asysg;
  p.n = n;
  p.K = 1;
  p.eta = 1.0;
  p.eta_bar = rate;
  return p;
}

std::vector<std::size_t> sample_with_replacement(std::size_t N, std::size_t n, RngStream& rng) {
  if (N == 0 || n == 0) throw SimulationError("sample_with_replacement: N and n must be positive");
  std::vector<std::size_t> out(n);
  for (auto& c : out) c = static_cast<std::size_t>(rng.uniform_index(N));
  return out;
}

std::string selection_stream_label(std::size_t round) {
  return "server/select/" + std::to_string(round);
}

ParticipantSpec select_participants(const Policy& policy, std::size_t num_clients,
                                    std::size_t, RngStream& rng) {
  if (uses_sampling(policy.kind)) {
    return SampledSet{sample_with_replacement(num_clients, policy.n, rng)};
  }
  return ArrivalOrder{policy.n};
}

ServerState server_round(const Policy& policy, ServerState server,
                         const std::vector<const LocalUpdate*>& updates) {
  std::vector<Participation> entry;
  entry.reserve(updates.size());
  for (const LocalUpdate* u : updates) {
    if (u->base_round > server.round) {
      throw SimulationError("server_round: update from client " + std::to_string(u->client_id) +
                            " has base round " + std::to_string(u->base_round) +
                            " ahead of server round " + std::to_string(server.round));
    }
    entry.push_back({u->client_id, u->base_round, u->stream_label});
  }
  const Weights mean = aggregate(updates, policy.n);
  server.eta = policy.eta;
  server = global_step(std::move(server), mean);
  server.participation_log.push_back(std::move(entry));
  return server;
}

ServerState server_round(const Policy& policy, ServerState server,
                         const std::vector<LocalUpdate>& updates) {
  std::vector<const LocalUpdate*> ptrs;
  ptrs.reserve(updates.size());
  for (const auto& u : updates) ptrs.push_back(&u);
  return server_round(policy, std::move(server), ptrs);
}

ServerState asysg_step(ServerState server, const Weights& gradient, double rate) {
  require_same_dim(server.weights, gradient, "asysg_step");
  server.weights.axpy(-rate, gradient);
  server.weights.require_finite("asysg_step at round " + std::to_string(server.round));
  ++server.round;
  return server;
}

Weights compact_oracle(const OracleInputs& in, std::vector<Weights>* history) {
  if (!in.problem) throw ReplayError("compact_oracle: no problem given");
  if (in.n == 0 || in.K == 0) throw ReplayError("compact_oracle: n and K must be positive");
  const Problem& problem = *in.problem;
  std::vector<Weights> w{in.initial};
  const double scale = in.eta * in.eta_bar / static_cast<double>(in.n);
  for (std::size_t t = 0; t < in.participation.size(); ++t) {
    const auto& round = in.participation[t];
    if (round.size() != in.n) {
      throw ReplayError("compact_oracle: round " + std::to_string(t) + " has " +
                        std::to_string(round.size()) + " participants, expected " +
                        std::to_string(in.n));
    }
    Weights sum(problem.dim());
    for (const auto& p : round) {
      if (p.base_round > t) {
        throw ReplayError("compact_oracle: round " + std::to_string(t) + " uses base round " +
                          std::to_string(p.base_round) + " from the future");
      }
      const std::string prefix = "train/client/" + std::to_string(p.client_id) + "/base/" +
                                 std::to_string(p.base_round) + "/";
      if (p.stream_label.rfind(prefix, 0) != 0) {
        throw ReplayError("compact_oracle: stream label '" + p.stream_label +
                          "' does not belong to client " + std::to_string(p.client_id) +
                          " at base round " + std::to_string(p.base_round));
      }
      RngStream rng = derive_stream(in.root_seed, p.stream_label);
      Weights local = w[p.base_round];
      for (std::size_t k = 0; k < in.K; ++k) {
        Weights g = stochastic_gradient(problem, p.client_id, local, in.batch, rng);
        local.axpy(-in.eta_bar, g);
        sum += g;
      }
    }
    Weights next = w.back();
    next.axpy(-scale, sum);
    next.require_finite("compact_oracle at round " + std::to_string(t));
    w.push_back(std::move(next));
  }
  Weights out = w.back();
  if (history) *history = std::move(w);
  return out;
}

}  // namespace defedavg
