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

#include "defedavg/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "defedavg/error.hpp"
#include "defedavg/metrics.hpp"

namespace defedavg {

namespace {

SweepCell run_cell(const ExperimentConfig& base, std::size_t n, std::uint64_t seed) {
  ExperimentConfig cfg = base;
  cfg.policy.n = n;
  cfg.seed = seed;
  RunConfig rc = to_run_config(cfg);
  rc.stop_at_target = true;
  const RunResult r = run(rc);
  return SweepCell{n, seed, r.rounds_to_target, r.time_to_target};
}

}  // namespace

std::vector<SweepCell> sweep(const ExperimentConfig& base, const std::vector<std::size_t>& n_values,
                             const std::vector<std::uint64_t>& seeds, std::size_t threads) {
  if (n_values.empty()) throw ConfigError("sweep needs at least one n value");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  for (std::size_t n : n_values) {
    if (n == 0 || n > base.problem.clients) {
      throw ConfigError("sweep: n = " + std::to_string(n) + " must lie in [1, " +
                        std::to_string(base.problem.clients) + "]");
    }
  }
  std::vector<std::pair<std::size_t, std::uint64_t>> jobs;
  for (std::size_t n : n_values) {
    for (std::uint64_t s : seeds) jobs.emplace_back(n, s);
  }
  std::vector<SweepCell> cells(jobs.size());
  threads = std::max<std::size_t>(1, std::min(threads, jobs.size()));

  if (threads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) cells[j] = run_cell(base, jobs[j].first, jobs[j].second);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
          try {
            cells[j] = run_cell(base, jobs[j].first, jobs[j].second);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  std::sort(cells.begin(), cells.end(), [](const SweepCell& a, const SweepCell& b) {
    return a.n != b.n ? a.n < b.n : a.seed < b.seed;
  });
  return cells;
}

std::vector<SweepSummary> summarize(const std::vector<SweepCell>& cells) {
  std::map<std::size_t, SweepSummary> by_n;
  std::map<std::size_t, std::pair<double, double>> sums;
  for (const auto& c : cells) {
    auto& s = by_n[c.n];
    s.n = c.n;
    ++s.runs;
    if (c.rounds_to_target) {
      ++s.reached;
      sums[c.n].first += static_cast<double>(*c.rounds_to_target);
      sums[c.n].second += *c.time_to_target;
    }
  }
  std::vector<SweepSummary> out;
  for (auto& [n, s] : by_n) {
    if (s.reached == s.runs) {
      s.mean_rounds = sums[n].first / static_cast<double>(s.runs);
      s.mean_time = sums[n].second / static_cast<double>(s.runs);
    }
    out.push_back(s);
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out = "n,seed,rounds_to_target,time_to_target\n";
  for (const auto& c : cells) {
    out += std::to_string(c.n) + ',' + std::to_string(c.seed) + ',';
    if (c.rounds_to_target) {
      out += std::to_string(*c.rounds_to_target) + ',' + format_double(*c.time_to_target);
    } else {
      out += "unreached,unreached";
    }
    out += '\n';
  }
  for (const auto& s : summarize(cells)) {
    out += std::to_string(s.n) + ",mean,";
    if (s.mean_rounds) {
      out += format_double(*s.mean_rounds) + ',' + format_double(*s.mean_time);
    } else {
      out += "unreached,unreached";
    }
    out += '\n';
  }
  return out;
}

}  // namespace defedavg
