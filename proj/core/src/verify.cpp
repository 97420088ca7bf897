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

#include "defedavg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "defedavg/algorithms.hpp"
#include "defedavg/dataset.hpp"
#include "defedavg/error.hpp"
#include "defedavg/metrics.hpp"
#include "defedavg/numerics.hpp"
#include "defedavg/simulator.hpp"
#include "defedavg/theory.hpp"

namespace defedavg {

GradCheckReport gradient_check(const Problem& problem, std::size_t probes, std::size_t batch,
                               double h, RngStream& rng, double weight_scale) {
  GradCheckReport rep;
  const auto* data = dynamic_cast<const DataProblem*>(&problem);
  for (std::size_t p = 0; p < probes; ++p) {
    Weights w = problem.initial_weights();
    for (double& v : w) v += weight_scale * rng.normal();
    Weights analytic(problem.dim());
    LossFn fn;
    if (data) {
      std::vector<std::size_t> picks(batch);
      for (auto& s : picks) s = rng.uniform_index(data->train_data().rows);
      data->batch_loss_grad(w, data->train_data(), picks, &analytic);
      fn = [data, picks](const Weights& x) {
        return data->batch_loss_grad(x, data->train_data(), picks, nullptr);
      };
    } else {
      const std::size_t client = rng.uniform_index(problem.num_clients());
      analytic = problem.client_gradient(client, w);
      fn = [&problem, client](const Weights& x) { return problem.client_loss(client, x); };
    }
    const Weights numeric = finite_difference_gradient(fn, w, h);
    rep.max_relative_error = std::max(rep.max_relative_error, relative_l2_error(analytic, numeric));
    ++rep.probes;
  }
  return rep;
}

namespace {

std::string fmt(double v) { return format_double(v); }

double max_diff(const std::vector<Weights>& a, const std::vector<Weights>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, max_abs_diff(a[i], b[i]));
  return m;
}

RunConfig quadratic_run(AlgorithmKind kind, std::size_t N, std::size_t n, std::size_t K,
                        std::size_t T, std::uint64_t seed) {
  RunConfig rc;
  rc.problem = make_quadratic(N, 6, 0.5, 1.0, seed, 1.0);
  rc.policy.kind = kind;
  rc.policy.n = n;
  rc.policy.K = K;
  rc.policy.eta = 1.0;
  rc.policy.eta_bar = 0.05;
  rc.T = T;
  rc.batch = 1;
  rc.root_seed = seed;
  rc.system.flops_per_iter = 17.0e6;
  rc.system.model_bytes = 2.2e6;
  return rc;
}

// Global iterate before each round, recomputed by the compact recursion.
std::vector<Weights> oracle_history(const RunConfig& rc, const RunResult& r) {
  OracleInputs in;
  in.problem = rc.problem.get();
  in.initial = rc.problem->initial_weights();
  in.root_seed = rc.root_seed;
  in.eta = rc.policy.eta;
  in.eta_bar = rc.policy.eta_bar;
  in.n = rc.policy.n;
  in.K = rc.policy.K;
  in.batch = rc.batch;
  in.participation = r.participation_log;
  std::vector<Weights> hist;
  compact_oracle(in, &hist);
  return hist;
}

}  // namespace

std::vector<VerifyResult> run_verify_suite(std::uint64_t seed) {
  std::vector<VerifyResult> out;
  auto record = [&](std::string name, auto&& body) {
    VerifyResult v{std::move(name), false, {}};
    try {
      body(v);
    } catch (const std::exception& e) {
      v.passed = false;
      v.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(v));
  };

  record("sampling unbiasedness", [&](VerifyResult& v) {
    RngStream rng = derive_stream(seed, "verify/unbiased/deltas");
    std::vector<Weights> deltas(20, Weights(3));
    for (auto& d : deltas) for (double& x : d) x = rng.normal();
    RngStream mc = derive_stream(seed, "verify/unbiased/mc");
    const auto good = mc_unbiasedness_check(deltas, 5, 20000, mc);
    RngStream mc2 = derive_stream(seed, "verify/unbiased/biased");
    MultisetSampler biased = [](std::size_t N, std::size_t n, RngStream& r) {
      std::vector<std::size_t> s(n);
      for (auto& c : s) c = r.uniform_index(N / 2);
      return s;
    };
    const auto bad = mc_unbiasedness_check(deltas, 5, 20000, mc2, biased);
    v.passed = good.passed && !bad.passed;
    v.detail = "max z " + fmt(good.max_z) + ", biased control " + (bad.passed ? "passed" : "rejected");
  });

  record("variance identity", [&](VerifyResult& v) {
    auto q = make_quadratic(10, 4, 0.3, 1.0, seed);
    RngStream rng = derive_stream(seed, "verify/variance");
    const auto rep = mc_variance_check(*q, 5, 4, 20000, rng);
    v.passed = rep.passed;
    v.detail = "empirical " + fmt(rep.empirical) + " +- " + fmt(rep.standard_error) + ", reference " +
               fmt(rep.reference) + ", bound " + fmt(rep.stated_bound);
  });

  record("synchronous reduction", [&](VerifyResult& v) {
    RunConfig a = quadratic_run(AlgorithmKind::fedavg, 10, 3, 3, 30, seed);
    a.system.speed_min = a.system.speed_max = 1.0;
    RunConfig b = a;
    b.policy.kind = AlgorithmKind::defedavg_niid;
    b.client_mode = ClientMode::synchronous;
    const auto ra = run(a);
    const auto rb = run(b);
    const double diff = max_diff(oracle_history(a, ra), oracle_history(b, rb));
    const double fin = max_abs_diff(ra.final_weights, rb.final_weights);
    v.passed = fin <= 1e-12 && diff <= 1e-12 && staleness_report(rb).max_staleness == 0;
    v.detail = "final max-abs diff " + fmt(fin);
  });

  record("single-step reduction", [&](VerifyResult& v) {
    RunConfig a = quadratic_run(AlgorithmKind::asysg, 10, 3, 1, 40, seed);
    a.policy = asysg_policy(3, 0.05);
    RunConfig b = a;
    b.policy.kind = AlgorithmKind::defedavg_iid;
    const auto ra = run(a);
    const auto rb = run(b);
    const bool identical = ra.final_weights == rb.final_weights;
    // Replay with asysg_step on the recorded participants.
    ServerState s;
    s.weights = a.problem->initial_weights();
    std::vector<Weights> hist{s.weights};
    for (const auto& round : ra.participation_log) {
      Weights g(a.problem->dim());
      for (const auto& p : round) {
        RngStream rng = derive_stream(a.root_seed, p.stream_label);
        g += stochastic_gradient(*a.problem, p.client_id, hist[p.base_round], a.batch, rng);
      }
      g *= 1.0 / static_cast<double>(round.size());
      s = asysg_step(std::move(s), g, 0.05);
      hist.push_back(s.weights);
    }
    const double diff = max_abs_diff(s.weights, ra.final_weights);
    v.passed = identical && diff <= 1e-12;
    v.detail = std::string(identical ? "bit-identical" : "differs") + " vs K=1 run; replay diff " + fmt(diff);
  });

  record("compact recursion", [&](VerifyResult& v) {
    const RunConfig rc = quadratic_run(AlgorithmKind::defedavg_niid, 20, 5, 5, 50, seed);
    const auto r = run(rc);
    const auto hist = oracle_history(rc, r);
    const double diff = max_abs_diff(hist.back(), r.final_weights);
    v.passed = diff <= 1e-10;
    v.detail = "max-abs diff " + fmt(diff) + ", lambda-hat " + std::to_string(staleness_report(r).max_staleness);
  });

  record("gradient check", [&](VerifyResult& v) {
    RngStream data_rng = derive_stream(seed, "verify/grad/data");
    SyntheticSpec spec;
    spec.train_samples = 60;
    spec.test_samples = 0;
    spec.features = 4;
    spec.classes = 3;
    auto data = make_synthetic_classification(spec, data_rng);
    auto train = std::make_shared<Dataset>(std::move(data.train));
    RngStream part_rng = derive_stream(seed, "verify/grad/partition");
    auto partition = partition_dataset(*train, PartitionScheme::iid, 3, part_rng);
    auto lr = make_logreg(train, partition, 0.0);
    auto mlp = make_mlp(train, partition, 5, seed);
    RngStream rng = derive_stream(seed, "verify/grad/probes");
    const auto a = gradient_check(*lr, 20, 5, 1e-6, rng);
    const auto b = gradient_check(*mlp, 20, 5, 1e-6, rng);
    v.passed = a.max_relative_error <= 1e-5 && b.max_relative_error <= 1e-5;
    v.detail = "logreg " + fmt(a.max_relative_error) + ", mlp " + fmt(b.max_relative_error);
  });

  record("staleness causality", [&](VerifyResult& v) {
    RunConfig rc = quadratic_run(AlgorithmKind::defedavg_iid, 20, 4, 2, 100, seed);
    const auto r = run(rc);
    const auto rep = staleness_report(r);
    v.passed = rep.causal;
    v.detail = "lambda-hat " + std::to_string(rep.max_staleness) + ", mean " + fmt(rep.mean_staleness);
  });

  return out;
}

}  // namespace defedavg
