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

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "defedavg/algorithms.hpp"
#include "defedavg/dataset.hpp"
#include "defedavg/fl_core.hpp"
#include "defedavg/problems.hpp"
#include "defedavg/rng.hpp"
#include "defedavg/simulator.hpp"

namespace {

using namespace defedavg;

void BM_PhiloxNormal(benchmark::State& state) {
  RngStream rng = derive_stream(1, "bench/normal");
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
}
BENCHMARK(BM_PhiloxNormal);

void BM_QuadraticLocalTrain(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  auto q = make_quadratic(10, dim, 0.5, 1.0, 1);
  const auto base = make_stamped(0, Weights(dim));
  std::size_t rep = 0;
  for (auto _ : state) {
    RngStream rng = derive_stream(1, training_stream_label(0, 0, rep++));
    benchmark::DoNotOptimize(local_train(base, 50, 0.01, *q, 0, 1, rng));
  }
  state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_QuadraticLocalTrain)->Arg(10)->Arg(1000);

std::shared_ptr<const Dataset> bench_data() {
  SyntheticSpec spec;
  spec.train_samples = 2000;
  spec.test_samples = 0;
  spec.features = 64;
  spec.classes = 10;
  RngStream rng = derive_stream(2, "bench/data");
  return std::make_shared<Dataset>(make_synthetic_classification(spec, rng).train);
}

void BM_MlpGradient(benchmark::State& state) {
  auto data = bench_data();
  RngStream prng = derive_stream(2, "bench/partition");
  auto mlp = make_mlp(data, partition_dataset(*data, PartitionScheme::iid, 20, prng), 32, 3);
  const Weights w = mlp->initial_weights();
  RngStream rng = derive_stream(2, "bench/mlp");
  for (auto _ : state) benchmark::DoNotOptimize(stochastic_gradient(*mlp, 0, w, 10, rng));
}
BENCHMARK(BM_MlpGradient);

void BM_RunEngine(benchmark::State& state) {
  RunConfig cfg;
  cfg.problem = make_quadratic(100, 20, 0.5, 1.0, 4);
  cfg.policy.kind = static_cast<AlgorithmKind>(state.range(0));
  cfg.policy.n = 10;
  cfg.policy.K = 10;
  cfg.policy.eta_bar = 0.01;
  cfg.T = 200;
  cfg.batch = 1;
  cfg.eval_every = 200;
  cfg.system.flops_per_iter = 17e6;
  cfg.system.model_bytes = 2.2e6;
  for (auto _ : state) benchmark::DoNotOptimize(run(cfg));
  state.SetLabel(std::string(to_string(cfg.policy.kind)));
}
BENCHMARK(BM_RunEngine)
    ->Arg(static_cast<int>(AlgorithmKind::fedavg))
    ->Arg(static_cast<int>(AlgorithmKind::defedavg_niid))
    ->Arg(static_cast<int>(AlgorithmKind::defedavg_iid))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
