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
#include <span>
#include <string_view>
#include <vector>

#include "defedavg/dataset.hpp"
#include "defedavg/rng.hpp"
#include "defedavg/weights.hpp"

namespace defedavg {

enum class ProblemKind { quadratic, logreg, mlp };

std::string_view to_string(ProblemKind kind);

struct KnownOptimum {
  double value = 0.0;  // F*
  Weights point;       // w*
};

/// Federated objective F(w) = (1/N) sum_i F_i(w) with per-client stochastic
/// gradient oracles. Implementations are immutable after construction.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual ProblemKind kind() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t num_clients() const = 0;

  virtual double client_loss(std::size_t client, const Weights& w) const = 0;
  virtual Weights client_gradient(std::size_t client, const Weights& w) const = 0;

  // Unbiased estimate of client_gradient. Callers go through the free
  // function stochastic_gradient(), which validates arguments.
  virtual Weights sample_gradient(std::size_t client, const Weights& w, std::size_t batch,
                                  RngStream& rng) const = 0;

  virtual double loss(const Weights& w) const;
  virtual Weights gradient(const Weights& w) const;

  virtual Weights initial_weights() const { return Weights(dim()); }
  virtual std::optional<double> test_accuracy(const Weights&) const { return std::nullopt; }

  // Exact constants, where the construction makes them known.
  virtual std::optional<double> exact_sigma() const { return std::nullopt; }
  virtual std::optional<double> exact_smoothness() const { return std::nullopt; }
  virtual std::optional<double> exact_heterogeneity() const { return std::nullopt; }
  virtual std::optional<KnownOptimum> known_optimum() const { return std::nullopt; }

  // Analytic FLOP count of one local SGD iteration.
  virtual double flops_per_iteration(std::size_t batch) const = 0;
};

using ProblemPtr = std::shared_ptr<const Problem>;

/// Validated entry point for the stochastic gradient oracle.
Weights stochastic_gradient(const Problem& problem, std::size_t client, const Weights& w,
                            std::size_t batch, RngStream& rng);

// ---------------------------------------------------------------------------

/// F_i(w) = 1/2 ||w - c_i||^2 with c_i = c_bar + nu * u_i, unit u_i summing to
/// zero, so ||grad F_i - grad F|| = nu everywhere and L = 1. The stochastic
/// gradient adds isotropic Gaussian noise with E||zeta||^2 = sigma^2 exactly
/// (the batch argument does not change the noise level).
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(std::vector<Weights> centers, Weights mean_center, double nu, double sigma);

  ProblemKind kind() const override { return ProblemKind::quadratic; }
  std::size_t dim() const override { return mean_center_.dim(); }
  std::size_t num_clients() const override { return centers_.size(); }

  double client_loss(std::size_t client, const Weights& w) const override;
  Weights client_gradient(std::size_t client, const Weights& w) const override;
  Weights sample_gradient(std::size_t client, const Weights& w, std::size_t batch,
                          RngStream& rng) const override;
  double loss(const Weights& w) const override;
  Weights gradient(const Weights& w) const override;

  std::optional<double> exact_sigma() const override { return sigma_; }
  std::optional<double> exact_smoothness() const override { return 1.0; }
  std::optional<double> exact_heterogeneity() const override { return nu_; }
  std::optional<KnownOptimum> known_optimum() const override;

  double flops_per_iteration(std::size_t batch) const override;

  const Weights& center(std::size_t client) const { return centers_.at(client); }
  const Weights& mean_center() const { return mean_center_; }

 private:
  std::vector<Weights> centers_;
  Weights mean_center_;
  double nu_;
  double sigma_;
  double optimum_value_;
};

/// Builds the quadratic instance. c_bar is the all-ones direction scaled so
/// F(0) - F* = initial_gap. Throws NumericError when sum u_i = 0 cannot hold
/// (N = 1 with nu > 0, or odd N in one dimension).
std::shared_ptr<const QuadraticProblem> make_quadratic(std::size_t num_clients, std::size_t dim,
                                                       double hetero_nu, double sigma,
                                                       std::uint64_t seed,
                                                       double initial_gap = 1.0);

// ---------------------------------------------------------------------------

/// Shared machinery for problems backed by a partitioned dataset: per-client
/// objectives are the mean cross-entropy over the client's shard plus
/// (l2 / 2) ||w||^2; stochastic gradients use a mini-batch drawn uniformly
/// with replacement from the shard.
class DataProblem : public Problem {
 public:
  std::size_t num_clients() const override { return partition_.shards.size(); }

  double client_loss(std::size_t client, const Weights& w) const override;
  Weights client_gradient(std::size_t client, const Weights& w) const override;
  Weights sample_gradient(std::size_t client, const Weights& w, std::size_t batch,
                          RngStream& rng) const override;
  std::optional<double> test_accuracy(const Weights& w) const override;

  const Dataset& train_data() const { return *train_; }
  const Partition& partition() const { return partition_; }
  double l2() const { return l2_; }

  // Mean cross-entropy over `samples` of `data`; when `grad` is non-null the
  // gradient of that mean is accumulated into it. No regularizer.
  virtual double batch_loss_grad(const Weights& w, const Dataset& data,
                                 std::span<const std::size_t> samples, Weights* grad) const = 0;
  virtual std::size_t predict(const Weights& w, std::span<const double> x) const = 0;

 protected:
  DataProblem(std::shared_ptr<const Dataset> train, Partition partition, double l2,
              std::shared_ptr<const Dataset> test);

  std::shared_ptr<const Dataset> train_;
  std::shared_ptr<const Dataset> test_;
  Partition partition_;
  double l2_;
};

/// Multinomial logistic regression (softmax cross-entropy). Parameters are
/// laid out class-major: [W_c (d_in entries), b_c] for each class c.
class SoftmaxRegression final : public DataProblem {
 public:
  SoftmaxRegression(std::shared_ptr<const Dataset> train, Partition partition, double l2,
                    std::shared_ptr<const Dataset> test);

  ProblemKind kind() const override { return ProblemKind::logreg; }
  std::size_t dim() const override;
  double flops_per_iteration(std::size_t batch) const override;

  double batch_loss_grad(const Weights& w, const Dataset& data,
                         std::span<const std::size_t> samples, Weights* grad) const override;
  std::size_t predict(const Weights& w, std::span<const double> x) const override;
};

/// One hidden tanh layer followed by a softmax head. Layout:
/// [W1 (hidden x d_in, row-major), b1, W2 (C x hidden, row-major), b2].
class MlpProblem final : public DataProblem {
 public:
  MlpProblem(std::shared_ptr<const Dataset> train, Partition partition, std::size_t hidden,
             std::uint64_t seed, std::shared_ptr<const Dataset> test);

  ProblemKind kind() const override { return ProblemKind::mlp; }
  std::size_t dim() const override;
  double flops_per_iteration(std::size_t batch) const override;
  Weights initial_weights() const override { return initial_; }

  double batch_loss_grad(const Weights& w, const Dataset& data,
                         std::span<const std::size_t> samples, Weights* grad) const override;
  std::size_t predict(const Weights& w, std::span<const double> x) const override;

  std::vector<double> hidden_preactivations(const Weights& w, std::span<const double> x) const;
  std::size_t hidden() const { return hidden_; }

 private:
  std::size_t hidden_;
  Weights initial_;
};

/// Throws DataError listing every client with an empty shard, or if shard
/// indices fall outside the dataset.
std::shared_ptr<const SoftmaxRegression> make_logreg(std::shared_ptr<const Dataset> dataset,
                                                     Partition partition, double l2,
                                                     std::shared_ptr<const Dataset> test = nullptr);

/// Weights initialized uniformly in +-1/sqrt(fan_in) from `seed`.
std::shared_ptr<const MlpProblem> make_mlp(std::shared_ptr<const Dataset> dataset,
                                           Partition partition, std::size_t hidden,
                                           std::uint64_t seed,
                                           std::shared_ptr<const Dataset> test = nullptr);

}  // namespace defedavg
