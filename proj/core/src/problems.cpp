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

#include "defedavg/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "defedavg/error.hpp"

namespace defedavg {

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::quadratic: return "quadratic";
    case ProblemKind::logreg: return "logreg";
    case ProblemKind::mlp: return "mlp";
  }
  return "unknown";
}

double Problem::loss(const Weights& w) const {
  double total = 0.0;
  for (std::size_t i = 0; i < num_clients(); ++i) total += client_loss(i, w);
  return total / static_cast<double>(num_clients());
}

Weights Problem::gradient(const Weights& w) const {
  Weights g(dim());
  for (std::size_t i = 0; i < num_clients(); ++i) g += client_gradient(i, w);
  g *= 1.0 / static_cast<double>(num_clients());
  return g;
}

Weights stochastic_gradient(const Problem& problem, std::size_t client, const Weights& w,
                            std::size_t batch, RngStream& rng) {
  if (client >= problem.num_clients()) {
    throw SimulationError("stochastic_gradient: client index " + std::to_string(client) +
                          " out of range (N = " + std::to_string(problem.num_clients()) + ")");
  }
  if (batch == 0) throw SimulationError("stochastic_gradient: batch must be at least 1");
  require_same_dim(w, Weights(problem.dim()), "stochastic_gradient");
  w.require_finite("stochastic_gradient input");
  return problem.sample_gradient(client, w, batch, rng);
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticProblem::QuadraticProblem(std::vector<Weights> centers, Weights mean_center, double nu,
                                   double sigma)
    : centers_(std::move(centers)), mean_center_(std::move(mean_center)), nu_(nu), sigma_(sigma) {
  double spread = 0.0;
  for (const auto& c : centers_) spread += (c - mean_center_).norm_sq();
  optimum_value_ = 0.5 * spread / static_cast<double>(centers_.size());
}

double QuadraticProblem::client_loss(std::size_t client, const Weights& w) const {
  return 0.5 * (w - centers_.at(client)).norm_sq();
}

Weights QuadraticProblem::client_gradient(std::size_t client, const Weights& w) const {
  return w - centers_.at(client);
}

Weights QuadraticProblem::sample_gradient(std::size_t client, const Weights& w, std::size_t,
                                          RngStream& rng) const {
  Weights g = w - centers_.at(client);
  if (sigma_ > 0.0) {
    const double scale = sigma_ / std::sqrt(static_cast<double>(g.dim()));
    for (double& v : g) v += scale * rng.normal();
  }
  return g;
}

double QuadraticProblem::loss(const Weights& w) const {
  return 0.5 * (w - mean_center_).norm_sq() + optimum_value_;
}

Weights QuadraticProblem::gradient(const Weights& w) const { return w - mean_center_; }

std::optional<KnownOptimum> QuadraticProblem::known_optimum() const {
  return KnownOptimum{optimum_value_, mean_center_};
}

double QuadraticProblem::flops_per_iteration(std::size_t) const {
  // subtract, noise scale-add, SGD axpy
  return 4.0 * static_cast<double>(dim());
}

namespace {

Weights random_unit(std::size_t dim, RngStream& rng) {
  Weights u(dim);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (double& v : u) v = rng.normal();
    norm = u.norm();
  }
  u *= 1.0 / norm;
  return u;
}

}  // namespace

std::shared_ptr<const QuadraticProblem> make_quadratic(std::size_t num_clients, std::size_t dim,
                                                       double hetero_nu, double sigma,
                                                       std::uint64_t seed, double initial_gap) {
  if (num_clients == 0) throw NumericError("make_quadratic: need at least one client");
  if (dim == 0) throw NumericError("make_quadratic: dimension must be positive");
  if (hetero_nu < 0.0 || sigma < 0.0 || initial_gap < 0.0) {
    throw NumericError("make_quadratic: nu, sigma and initial_gap must be nonnegative");
  }
  if (hetero_nu > 0.0 && num_clients == 1) {
    throw NumericError("make_quadratic: a single client cannot have heterogeneity nu > 0");
  }
  if (hetero_nu > 0.0 && num_clients % 2 == 1 && dim == 1) {
    throw NumericError("make_quadratic: odd client count needs dim >= 2 for nu > 0");
  }

  Weights mean_center(dim, std::sqrt(2.0 * initial_gap / static_cast<double>(dim)));

  std::vector<Weights> offsets(num_clients, Weights(dim));
  if (hetero_nu > 0.0) {
    RngStream rng = derive_stream(seed, "problem/quadratic/directions");
    std::size_t i = 0;
    const std::size_t paired = num_clients % 2 == 0 ? num_clients : num_clients - 3;
    for (; i < paired; i += 2) {
      Weights u = random_unit(dim, rng);
      offsets[i] = u;
      offsets[i + 1] = -1.0 * u;
    }
    if (i < num_clients) {
      // Three unit vectors at 120 degrees in a random plane.
      Weights a = random_unit(dim, rng);
      Weights b = random_unit(dim, rng);
      b.axpy(-b.dot(a), a);
      while (b.norm() < 1e-8) {
        b = random_unit(dim, rng);
        b.axpy(-b.dot(a), a);
      }
      b *= 1.0 / b.norm();
      const double s = std::sqrt(3.0) / 2.0;
      offsets[i] = a;
      offsets[i + 1] = (-0.5 * a).axpy(s, b);
      offsets[i + 2] = (-0.5 * a).axpy(-s, b);
    }
  }
  std::vector<Weights> centers;
  centers.reserve(num_clients);
  for (auto& u : offsets) centers.push_back(Weights(mean_center).axpy(hetero_nu, u));
  return std::make_shared<QuadraticProblem>(std::move(centers), std::move(mean_center), hetero_nu,
                                            sigma);
}

// ---------------------------------------------------------------------------
// Data problems

DataProblem::DataProblem(std::shared_ptr<const Dataset> train, Partition partition, double l2,
                         std::shared_ptr<const Dataset> test)
    : train_(std::move(train)), test_(std::move(test)), partition_(std::move(partition)), l2_(l2) {
  if (!train_) throw DataError("data problem needs a training dataset");
  validate_dataset(*train_);
  if (test_) validate_dataset(*test_);
  if (test_ && test_->cols != train_->cols) {
    throw DataError("test set feature width differs from the training set");
  }
  if (l2_ < 0.0) throw DataError("l2 regularization must be nonnegative");
  if (partition_.shards.empty()) throw DataError("partition has no clients");
  std::string empty;
  for (std::size_t c = 0; c < partition_.shards.size(); ++c) {
    if (partition_.shards[c].empty()) empty += (empty.empty() ? "" : ", ") + std::to_string(c);
    for (std::size_t idx : partition_.shards[c]) {
      if (idx >= train_->rows) {
        throw DataError("partition index " + std::to_string(idx) + " of client " +
                        std::to_string(c) + " is outside the dataset");
      }
    }
  }
  if (!empty.empty()) throw DataError("empty shard for client(s): " + empty);
}

double DataProblem::client_loss(std::size_t client, const Weights& w) const {
  const auto& shard = partition_.shards.at(client);
  return batch_loss_grad(w, *train_, shard, nullptr) + 0.5 * l2_ * w.norm_sq();
}

Weights DataProblem::client_gradient(std::size_t client, const Weights& w) const {
  const auto& shard = partition_.shards.at(client);
  Weights g(dim());
  batch_loss_grad(w, *train_, shard, &g);
  if (l2_ > 0.0) g.axpy(l2_, w);
  return g;
}

Weights DataProblem::sample_gradient(std::size_t client, const Weights& w, std::size_t batch,
                                     RngStream& rng) const {
  const auto& shard = partition_.shards.at(client);
  std::vector<std::size_t> picks(batch);
  for (auto& p : picks) p = shard[rng.uniform_index(shard.size())];
  Weights g(dim());
  batch_loss_grad(w, *train_, picks, &g);
  if (l2_ > 0.0) g.axpy(l2_, w);
  return g;
}

std::optional<double> DataProblem::test_accuracy(const Weights& w) const {
  if (!test_) return std::nullopt;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test_->rows; ++i) {
    if (predict(w, test_->row(i)) == static_cast<std::size_t>(test_->labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_->rows);
}

namespace {

// In-place softmax; returns log-sum-exp of the input logits.
double softmax_inplace(std::span<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return zmax + std::log(sum);
}

}  // namespace

SoftmaxRegression::SoftmaxRegression(std::shared_ptr<const Dataset> train, Partition partition,
                                     double l2, std::shared_ptr<const Dataset> test)
    : DataProblem(std::move(train), std::move(partition), l2, std::move(test)) {}

std::size_t SoftmaxRegression::dim() const {
  return train_->num_classes * (train_->cols + 1);
}

double SoftmaxRegression::flops_per_iteration(std::size_t batch) const {
  return 4.0 * static_cast<double>(batch * dim());
}

double SoftmaxRegression::batch_loss_grad(const Weights& w, const Dataset& data,
                                          std::span<const std::size_t> samples,
                                          Weights* grad) const {
  const std::size_t classes = train_->num_classes;
  const std::size_t stride = data.cols + 1;
  std::vector<double> z(classes);
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (std::size_t s : samples) {
    const auto x = data.row(s);
    for (std::size_t c = 0; c < classes; ++c) {
      const double* wc = &w.values()[c * stride];
      double acc = wc[data.cols];
      for (std::size_t j = 0; j < data.cols; ++j) acc += wc[j] * x[j];
      z[c] = acc;
    }
    const auto y = static_cast<std::size_t>(data.labels[s]);
    const double zy = z[y];
    total += softmax_inplace(z) - zy;
    if (grad) {
      for (std::size_t c = 0; c < classes; ++c) {
        const double r = (z[c] - (c == y ? 1.0 : 0.0)) * inv;
        double* gc = &(*grad)[c * stride];
        for (std::size_t j = 0; j < data.cols; ++j) gc[j] += r * x[j];
        gc[data.cols] += r;
      }
    }
  }
  return total * inv;
}

std::size_t SoftmaxRegression::predict(const Weights& w, std::span<const double> x) const {
  const std::size_t stride = x.size() + 1;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < train_->num_classes; ++c) {
    const double* wc = &w.values()[c * stride];
    double acc = wc[x.size()];
    for (std::size_t j = 0; j < x.size(); ++j) acc += wc[j] * x[j];
    if (acc > best_score) {
      best_score = acc;
      best = c;
    }
  }
  return best;
}

std::shared_ptr<const SoftmaxRegression> make_logreg(std::shared_ptr<const Dataset> dataset,
                                                     Partition partition, double l2,
                                                     std::shared_ptr<const Dataset> test) {
  return std::make_shared<SoftmaxRegression>(std::move(dataset), std::move(partition), l2,
                                             std::move(test));
}

// ---------------------------------------------------------------------------
// MLP

namespace {

struct MlpLayout {
  std::size_t in, hidden, out;
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return hidden * in; }
  std::size_t w2() const { return b1() + hidden; }
  std::size_t b2() const { return w2() + out * hidden; }
  std::size_t size() const { return b2() + out; }
};

}  // namespace

MlpProblem::MlpProblem(std::shared_ptr<const Dataset> train, Partition partition,
                       std::size_t hidden, std::uint64_t seed, std::shared_ptr<const Dataset> test)
    : DataProblem(std::move(train), std::move(partition), 0.0, std::move(test)), hidden_(hidden) {
  if (hidden_ == 0) throw DataError("mlp hidden width must be at least 1");
  const MlpLayout L{train_->cols, hidden_, train_->num_classes};
  initial_ = Weights(L.size());
  RngStream rng = derive_stream(seed, "problem/mlp/init");
  const double r1 = 1.0 / std::sqrt(static_cast<double>(L.in));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(L.hidden));
  for (std::size_t i = 0; i < L.w2(); ++i) initial_[i] = rng.uniform(-r1, r1);
  for (std::size_t i = L.w2(); i < L.size(); ++i) initial_[i] = rng.uniform(-r2, r2);
}

std::size_t MlpProblem::dim() const {
  return MlpLayout{train_->cols, hidden_, train_->num_classes}.size();
}

double MlpProblem::flops_per_iteration(std::size_t batch) const {
  return 6.0 * static_cast<double>(batch * dim());
}

std::vector<double> MlpProblem::hidden_preactivations(const Weights& w,
                                                      std::span<const double> x) const {
  const MlpLayout L{train_->cols, hidden_, train_->num_classes};
  std::vector<double> a(L.hidden);
  for (std::size_t h = 0; h < L.hidden; ++h) {
    double acc = w[L.b1() + h];
    const double* row = &w.values()[L.w1() + h * L.in];
    for (std::size_t j = 0; j < L.in; ++j) acc += row[j] * x[j];
    a[h] = acc;
  }
  return a;
}

double MlpProblem::batch_loss_grad(const Weights& w, const Dataset& data,
                                   std::span<const std::size_t> samples, Weights* grad) const {
  const MlpLayout L{train_->cols, hidden_, train_->num_classes};
  std::vector<double> act(L.hidden), z(L.out), dact(L.hidden);
  const double inv = 1.0 / static_cast<double>(samples.size());
  double total = 0.0;
  for (std::size_t s : samples) {
    const auto x = data.row(s);
    act = hidden_preactivations(w, x);
    for (double& v : act) v = std::tanh(v);
    for (std::size_t c = 0; c < L.out; ++c) {
      double acc = w[L.b2() + c];
      const double* row = &w.values()[L.w2() + c * L.hidden];
      for (std::size_t h = 0; h < L.hidden; ++h) acc += row[h] * act[h];
      z[c] = acc;
    }
    const auto y = static_cast<std::size_t>(data.labels[s]);
    const double zy = z[y];
    total += softmax_inplace(z) - zy;
    if (!grad) continue;

    auto& g = *grad;
    std::fill(dact.begin(), dact.end(), 0.0);
    for (std::size_t c = 0; c < L.out; ++c) {
      const double dz = (z[c] - (c == y ? 1.0 : 0.0)) * inv;
      const double* row = &w.values()[L.w2() + c * L.hidden];
      double* grow = &g[L.w2() + c * L.hidden];
      for (std::size_t h = 0; h < L.hidden; ++h) {
        grow[h] += dz * act[h];
        dact[h] += dz * row[h];
      }
      g[L.b2() + c] += dz;
    }
    for (std::size_t h = 0; h < L.hidden; ++h) {
      const double da = dact[h] * (1.0 - act[h] * act[h]);
      double* grow = &g[L.w1() + h * L.in];
      for (std::size_t j = 0; j < L.in; ++j) grow[j] += da * x[j];
      g[L.b1() + h] += da;
    }
  }
  return total * inv;
}

std::size_t MlpProblem::predict(const Weights& w, std::span<const double> x) const {
  const MlpLayout L{train_->cols, hidden_, train_->num_classes};
  auto act = hidden_preactivations(w, x);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < L.out; ++c) {
    double acc = w[L.b2() + c];
    for (std::size_t h = 0; h < L.hidden; ++h) acc += w[L.w2() + c * L.hidden + h] * std::tanh(act[h]);
    if (acc > best_score) {
      best_score = acc;
      best = c;
    }
  }
  return best;
}

std::shared_ptr<const MlpProblem> make_mlp(std::shared_ptr<const Dataset> dataset,
                                           Partition partition, std::size_t hidden,
                                           std::uint64_t seed,
                                           std::shared_ptr<const Dataset> test) {
  return std::make_shared<MlpProblem>(std::move(dataset), std::move(partition), hidden, seed,
                                      std::move(test));
}

}  // namespace defedavg
