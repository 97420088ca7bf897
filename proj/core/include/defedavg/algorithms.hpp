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
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "defedavg/fl_core.hpp"
#include "defedavg/problems.hpp"
#include "defedavg/rng.hpp"
#include "defedavg/weights.hpp"

namespace defedavg {

enum class AlgorithmKind { fedavg, defedavg_niid, defedavg_iid, fedbuff, asysg };

std::string_view to_string(AlgorithmKind kind);
std::optional<AlgorithmKind> parse_algorithm_kind(std::string_view text);

// Sampled (fedavg, defedavg_niid) or filled in arrival order (the rest).
bool uses_sampling(AlgorithmKind kind);

struct Policy {
  AlgorithmKind kind = AlgorithmKind::defedavg_niid;
  std::size_t n = 10;
  SendPolicy send_policy = SendPolicy::always_overwrite;
  std::size_t K = 50;
  double eta = 1.0;
  double eta_bar = 0.01;
};

/// Throws SimulationError unless 1 <= n <= N, K >= 1 and the rates are
/// finite and nonnegative. asysg additionally requires K = 1 and eta = 1.
void validate_policy(const Policy& policy, std::size_t num_clients);

/// AsySG expressed as DeFedAvg-IID with K = 1, eta = 1, eta_bar = rate.
Policy asysg_policy(std::size_t n, double rate);

struct SampledSet {
  std::vector<std::size_t> clients;  // multiset, in draw order
};
struct ArrivalOrder {
  std::size_t count = 0;
};
using ParticipantSpec = std::variant<SampledSet, ArrivalOrder>;

/// n independent uniform draws from [0, N), duplicates kept.
std::vector<std::size_t> sample_with_replacement(std::size_t N, std::size_t n, RngStream& rng);

std::string selection_stream_label(std::size_t round);

/// Sampling policies draw from `rng`; arrival-order policies leave it untouched.
ParticipantSpec select_participants(const Policy& policy, std::size_t num_clients,
                                    std::size_t round, RngStream& rng);

/// Aggregates |updates| = n deltas into one global step and logs the
/// participants. A base_round newer than the server round is a causality
/// violation (SimulationError).
ServerState server_round(const Policy& policy, ServerState server,
                         const std::vector<const LocalUpdate*>& updates);
ServerState server_round(const Policy& policy, ServerState server,
                         const std::vector<LocalUpdate>& updates);

/// w <- w - rate * gradient, round + 1.
ServerState asysg_step(ServerState server, const Weights& gradient, double rate);

struct OracleInputs {
  const Problem* problem = nullptr;
  Weights initial;
  std::uint64_t root_seed = 0;
  double eta = 1.0;
  double eta_bar = 0.0;
  std::size_t n = 1;
  std::size_t K = 1;
  std::size_t batch = 1;
  // participation[t] are the participants of round t, each with the base round
  // and RNG stream of its local run.
  std::vector<std::vector<Participation>> participation;
};

/// Direct recursion
///   w^{t+1} = w^t - (eta * eta_bar / n) sum_{i in I_t} sum_k grad f(w_i^{tau,k}; xi)
/// replaying every local trajectory from its stream label, with no buffers.
/// `history`, when non-null, receives w^0..w^T. Throws ReplayError when a
/// label does not match its participant or a base round lies in the future.
Weights compact_oracle(const OracleInputs& in, std::vector<Weights>* history = nullptr);

}  // namespace defedavg
