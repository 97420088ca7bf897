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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "defedavg/algorithms.hpp"
#include "defedavg/config.hpp"
#include "defedavg/dataset.hpp"
#include "defedavg/fl_core.hpp"
#include "defedavg/metrics.hpp"
#include "defedavg/problems.hpp"
#include "defedavg/simulator.hpp"
#include "defedavg/sweep.hpp"
#include "defedavg/theory.hpp"
#include "defedavg/verify.hpp"

namespace {

using namespace defedavg;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

OracleInputs oracle_inputs(const RunConfig& cfg, const RunResult& r) {
  OracleInputs in;
  in.problem = cfg.problem.get();
  in.initial = cfg.problem->initial_weights();
  in.root_seed = cfg.root_seed;
  in.eta = cfg.policy.eta;
  in.eta_bar = cfg.policy.eta_bar;
  in.n = cfg.policy.n;
  in.K = cfg.policy.K;
  in.batch = cfg.batch;
  in.participation = r.participation_log;
  return in;
}

RunConfig quadratic_run(AlgorithmKind kind, std::size_t N, std::size_t n, std::size_t K,
                        std::size_t T, std::uint64_t seed) {
  RunConfig c;
  c.problem = make_quadratic(N, 10, 0.5, 1.0, seed);
  c.policy.kind = kind;
  c.policy.n = n;
  c.policy.K = K;
  c.policy.eta = 1.0;
  c.policy.eta_bar = 0.05;
  c.T = T;
  c.batch = 1;
  c.root_seed = seed;
  c.system.flops_per_iter = 17e6;
  c.system.model_bytes = 2.2e6;
  c.eval_every = T;
  return c;
}

// ---------------------------------------------------------------------------

Outcome ac1_compact_oracle() {
  const auto cfg = quadratic_run(AlgorithmKind::defedavg_niid, 20, 5, 5, 50, 1);
  const auto r = run(cfg);
  const double diff = max_abs_diff(compact_oracle(oracle_inputs(cfg, r)), r.final_weights);
  const auto st = staleness_report(r);
  return {diff <= 1e-10, "max |w_buffered - w_compact| = " + fmt(diff) + " (lambda-hat " +
                             std::to_string(st.max_staleness) + ")"};
}

// FedAvg written out directly: sample, train every draw's client from w^t,
// average, step. Compared against degenerate DeFedAvg-nIID for T = 1..100.
Outcome ac2_synchronous_reduction() {
  const std::size_t N = 16, n = 4, K = 3, T = 100;
  auto cfg = quadratic_run(AlgorithmKind::defedavg_niid, N, n, K, T, 2);
  cfg.client_mode = ClientMode::synchronous;
  cfg.system.speed_factors.assign(N, 1.0);
  const Problem& q = *cfg.problem;

  std::vector<Weights> direct{q.initial_weights()};
  for (std::size_t t = 0; t < T; ++t) {
    RngStream sel = derive_stream(cfg.root_seed, selection_stream_label(t));
    const auto sampled = sample_with_replacement(N, n, sel);
    const auto base = make_stamped(t, direct.back());
    Weights sum(q.dim());
    for (auto c : sampled) {
      RngStream rng = derive_stream(cfg.root_seed, training_stream_label(c, t, 0));
      sum += local_train(base, K, cfg.policy.eta_bar, q, c, cfg.batch, rng).delta;
    }
    Weights next = direct.back();
    next.axpy(-cfg.policy.eta / static_cast<double>(n), sum);
    direct.push_back(std::move(next));
  }
  double worst = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    auto c = cfg;
    c.T = t;
    worst = std::max(worst, max_abs_diff(run(c).final_weights, direct[t]));
    auto f = c;
    f.policy.kind = AlgorithmKind::fedavg;
    f.client_mode = ClientMode::continuous;
    worst = std::max(worst, max_abs_diff(run(f).final_weights, direct[t]));
  }
  return {worst <= 1e-12, "max trajectory difference over 100 rounds = " + fmt(worst)};
}

// The engine's K = 1, eta = 1 IID run against asysg_step applied to the
// replayed gradients, and against the asysg policy itself.
Outcome ac3_asysg_reduction() {
  const double rate = 0.05;
  auto cfg = quadratic_run(AlgorithmKind::defedavg_iid, 20, 4, 1, 200, 3);
  cfg.policy.eta = 1.0;
  cfg.policy.eta_bar = rate;
  const auto iid = run(cfg);
  auto a = cfg;
  a.policy = asysg_policy(4, rate);
  const auto asy = run(a);
  const bool identical = asy.final_weights == iid.final_weights;

  const Problem& q = *cfg.problem;
  std::vector<Weights> w{q.initial_weights()};
  ServerState s;
  s.weights = w[0];
  for (const auto& round : iid.participation_log) {
    Weights g(q.dim());
    for (const auto& p : round) {
      RngStream rng = derive_stream(cfg.root_seed, p.stream_label);
      g += stochastic_gradient(q, p.client_id, w[p.base_round], cfg.batch, rng);
    }
    g *= 1.0 / static_cast<double>(round.size());
    s = asysg_step(s, g, rate);
    w.push_back(s.weights);
  }
  const double diff = max_abs_diff(s.weights, iid.final_weights);
  return {identical && diff <= 1e-12,
          std::string("asysg policy ") + (identical ? "bit-identical" : "DIFFERS") +
              "; asysg_step replay diff = " + fmt(diff)};
}

Outcome ac4_unbiasedness() {
  RngStream drng = derive_stream(4, "acceptance/deltas");
  std::vector<Weights> deltas(20, Weights(6));
  for (auto& d : deltas) {
    for (double& x : d) x = drng.normal();
  }
  RngStream rng = derive_stream(4, "acceptance/unbiased");
  const auto good = mc_unbiasedness_check(deltas, 5, 100000, rng);
  MultisetSampler biased = [](std::size_t N, std::size_t n, RngStream& r) {
    std::vector<std::size_t> out(n);
    for (auto& c : out) {
      // Client 0 drawn twice as often as the others.
      const auto k = r.uniform_index(N + 1);
      c = static_cast<std::size_t>(k == N ? 0 : k);
    }
    return out;
  };
  RngStream rng2 = derive_stream(4, "acceptance/biased");
  const auto bad = mc_unbiasedness_check(deltas, 5, 100000, rng2, biased);
  return {good.passed && !bad.passed,
          "uniform max z = " + fmt(good.max_z) + ", biased control max z = " + fmt(bad.max_z)};
}

Outcome ac5_variance() {
  struct Case {
    std::size_t n, K;
    double sigma;
  };
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 5;
  for (const Case c : {Case{5, 4, 1.0}, Case{1, 1, 2.0}, Case{10, 8, 0.5}}) {
    auto q = make_quadratic(20, 8, 0.5, c.sigma, seed);
    RngStream rng = derive_stream(seed++, "acceptance/variance");
    const auto rep = mc_variance_check(*q, c.n, c.K, 100000, rng);
    const double ref = static_cast<double>(c.n * c.K) * c.sigma * c.sigma;
    const bool here = std::abs(rep.empirical - ref) <= 4 * rep.standard_error &&
                      rep.empirical <= 2 * ref + 4 * rep.standard_error;
    ok = ok && here;
    detail += (detail.empty() ? "" : "; ") + fmt(rep.empirical) + " +- " + fmt(rep.standard_error) +
              " vs " + fmt(ref);
  }
  return {ok, detail};
}

constexpr const char* kSpeedup = R"(
[problem]
kind = quadratic
clients = 64
dim = 10
hetero_nu = 0.5
sigma = 1.0
initial_gap = 1.0

[algorithm]
kind = defedavg_niid
n = 2
K = 5
eta = 1.0
eta_bar = 0.06

[system]
preset = fashionmnist

[run]
T = 3000
batch = 1
seed = 1
eval_every = 1
target_grad_norm_sq = 0.02
)";

Outcome ac6_linear_speedup() {
  const auto summary = summarize(sweep(parse_config(kSpeedup), {2, 4, 8, 16, 32}, {1, 2, 3, 4, 5}, 8));
  bool ok = true;
  std::string detail = "mean rounds:";
  for (std::size_t i = 0; i < summary.size(); ++i) {
    if (!summary[i].mean_rounds) {
      ok = false;
      detail += " n=" + std::to_string(summary[i].n) + ":unreached";
      continue;
    }
    detail += " n=" + std::to_string(summary[i].n) + ":" + fmt(*summary[i].mean_rounds);
    if (i > 0 && summary[i - 1].mean_rounds && *summary[i].mean_rounds > *summary[i - 1].mean_rounds) {
      ok = false;
    }
  }
  if (ok) {
    const double ratio = *summary.front().mean_rounds / *summary.back().mean_rounds;
    ok = ratio >= 3.0;
    detail += ", ratio " + fmt(ratio);
  }
  return {ok, detail};
}

constexpr const char* kStraggler = R"(
[problem]
kind = logreg
clients = 50
samples = 1000
test_samples = 500
features = 10
classes = 2
separation = 2.0
partition = iid

[algorithm]
kind = defedavg_iid
n = 10
K = 10
eta = 1.0
eta_bar = 0.05

[system]
preset = fashionmnist

[run]
T = 3000
batch = 10
seed = 1
eval_every = 1
target_grad_norm_sq = 1e-3
)";

Outcome ac7_straggler() {
  auto iid = parse_config(kStraggler);
  auto fedavg = iid;
  fedavg.policy.kind = AlgorithmKind::fedavg;
  const auto si = summarize(sweep(iid, {10}, {1, 2, 3, 4, 5}, 5)).front();
  const auto sf = summarize(sweep(fedavg, {10}, {1, 2, 3, 4, 5}, 5)).front();
  if (!si.mean_time || !sf.mean_time) return {false, "target not reached by every seed"};
  const double ratio = *sf.mean_time / *si.mean_time;
  return {*si.mean_time <= *sf.mean_time / 1.3,
          "mean time to target: iid " + fmt(*si.mean_time) + " s, fedavg " + fmt(*sf.mean_time) +
              " s (fedavg/iid = " + fmt(ratio) + ")"};
}

Outcome ac8_staleness_audit() {
  const std::size_t N = 50, n = 10, T = 500;
  const std::size_t bound = lambda_bound(N, n, T, 0.01);
  std::size_t within = 0;
  std::size_t worst = 0;
  bool logs_ok = true;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto cfg = quadratic_run(AlgorithmKind::defedavg_niid, N, n, 5, T, seed);
    const auto r = run(cfg);
    const auto st = staleness_report(r);
    logs_ok = logs_ok && st.causal && st.samples == n * T;
    for (const auto& [delay, count] : st.histogram) logs_ok = logs_ok && delay <= st.max_staleness;
    if (st.max_staleness <= bound) ++within;
    worst = std::max(worst, st.max_staleness);
  }
  return {within >= 95 && logs_ok, std::to_string(within) + "/100 runs with lambda-hat <= " +
                                       std::to_string(bound) + " (worst " + std::to_string(worst) +
                                       ")" + (logs_ok ? "" : ", staleness log inconsistent")};
}

Outcome ac9_rate_calculators() {
  ProblemConstants c;
  c.L = 1.0;
  c.sigma = 1.0;
  c.G = 1.0;
  c.gap = 2.0;
  const auto niid = niid_rates(10, 50, c, 10000, 1.0);
  const auto iid = iid_rates(10, 50, c, 10000, 1.0);
  auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
  const double errs[] = {rel(niid.eta, std::sqrt(4000.0)), rel(niid.eta_bar, 1.0 / (std::sqrt(104e4) * 50.0)),
                         rel(iid.eta, std::sqrt(500.0)), rel(iid.eta_bar, 2e-4),
                         rel(static_cast<double>(lambda_bound(100, 10, 1000, 0.01)), 180.0)};
  const double worst = *std::max_element(std::begin(errs), std::end(errs));
  return {worst <= 1e-9, "eta " + fmt(niid.eta) + ", " + fmt(iid.eta) + "; eta_bar " +
                             fmt(niid.eta_bar) + ", " + fmt(iid.eta_bar) + "; bound " +
                             std::to_string(lambda_bound(100, 10, 1000, 0.01)) + "; max rel err " +
                             fmt(worst)};
}

Outcome ac10_gradients() {
  SyntheticSpec spec;
  spec.train_samples = 200;
  spec.test_samples = 0;
  spec.features = 8;
  spec.classes = 4;
  RngStream drng = derive_stream(10, "acceptance/data");
  auto data = std::make_shared<Dataset>(make_synthetic_classification(spec, drng).train);
  RngStream prng = derive_stream(10, "acceptance/partition");
  const auto part = partition_dataset(*data, PartitionScheme::iid, 4, prng);
  const auto lr = make_logreg(data, part, 0.01);
  const auto mlp = make_mlp(data, part, 12, 10);
  RngStream r1 = derive_stream(10, "acceptance/gradcheck/logreg");
  RngStream r2 = derive_stream(10, "acceptance/gradcheck/mlp");
  const auto a = gradient_check(*lr, 20, 10, 1e-6, r1);
  const auto b = gradient_check(*mlp, 20, 10, 1e-6, r2);
  return {a.max_relative_error <= 1e-5 && b.max_relative_error <= 1e-5 && a.probes == 20 &&
              b.probes == 20,
          "max relative L2 error: logreg " + fmt(a.max_relative_error) + ", mlp " +
              fmt(b.max_relative_error)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome ac11_determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "defedavg_acceptance";
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "run.ini";
  write_text_file(cfg, kSpeedup);
  std::vector<std::string> csvs;
  for (int i = 0; i < 2; ++i) {
    const auto out = dir / ("run" + std::to_string(i) + ".csv");
    const std::string cfg_s = cfg.string(), out_s = out.string();
    const char* argv[] = {"defedavg", "run", cfg_s.c_str(), "--out", out_s.c_str(), "--seed", "7"};
    std::ostringstream o, e;
    if (cli::run_cli(7, argv, o, e) != 0) return {false, "run failed: " + e.str()};
    csvs.push_back(slurp(out));
  }
  const bool run_same = !csvs[0].empty() && csvs[0] == csvs[1];
  const auto base = parse_config(kSpeedup);
  const auto serial = sweep_csv(sweep(base, {2, 8, 32}, {1, 2, 3, 4}, 1));
  const auto parallel = sweep_csv(sweep(base, {2, 8, 32}, {1, 2, 3, 4}, 8));
  std::filesystem::remove_all(dir);
  return {run_same && serial == parallel,
          std::string("run csv ") + (run_same ? "identical" : "DIFFERS") + " (" +
              std::to_string(csvs[0].size()) + " bytes); sweep serial vs parallel " +
              (serial == parallel ? "identical" : "DIFFERS")};
}

constexpr const char* kLocalSteps = R"(
[problem]
kind = quadratic
clients = 20
dim = 10
sigma = 1.0
initial_gap = 1.0

[algorithm]
kind = defedavg_iid
n = 5
K = 5
eta = 5.0
rate_source = theorem_local

[system]
preset = fashionmnist
model_bytes = 2.2e4

[run]
T = 1000
batch = 1
seed = 1
eval_every = 1
target_grad_norm_sq = 0.005
)";

Outcome ac12_local_steps() {
  bool ok = true;
  std::string detail = "mean rounds:";
  double prev = INFINITY;
  for (std::size_t K : {5u, 20u, 50u}) {
    auto c = parse_config(kLocalSteps);
    c.policy.K = K;
    const double eta_bar = to_run_config(c).policy.eta_bar;
    const auto s = summarize(sweep(c, {5}, {1, 2, 3, 4, 5}, 5)).front();
    if (!s.mean_rounds) {
      ok = false;
      detail += " K=" + std::to_string(K) + ":unreached";
      prev = -INFINITY;
      continue;
    }
    detail += " K=" + std::to_string(K) + ":" + fmt(*s.mean_rounds) + " (eta_bar " + fmt(eta_bar) + ")";
    if (*s.mean_rounds > prev) ok = false;
    prev = *s.mean_rounds;
  }
  return {ok, detail};
}

struct Criterion {
  const char* id;
  const char* name;
  double limit_s;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "compact-formula oracle", 5, ac1_compact_oracle},
      {"AC2", "synchronous reduction", 5, ac2_synchronous_reduction},
      {"AC3", "AsySG reduction", 2, ac3_asysg_reduction},
      {"AC4", "sampling unbiasedness", 10, ac4_unbiasedness},
      {"AC5", "variance bound", 30, ac5_variance},
      {"AC6", "linear-speedup trend", 120, ac6_linear_speedup},
      {"AC7", "straggler mitigation", 120, ac7_straggler},
      {"AC8", "staleness audit", 180, ac8_staleness_audit},
      {"AC9", "rate calculators", 1, ac9_rate_calculators},
      {"AC10", "gradient correctness", 10, ac10_gradients},
      {"AC11", "determinism", 30, ac11_determinism},
      {"AC12", "impact of K", 60, ac12_local_steps},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.passed && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS " : "FAIL ") << c.id << " " << c.name << ": " << o.detail << " ["
              << fmt(secs) << " s, limit " << fmt(c.limit_s) << " s" << (in_time ? "" : ", OVER")
              << "]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
