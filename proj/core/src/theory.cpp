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

#include "defedavg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "defedavg/algorithms.hpp"
#include "defedavg/error.hpp"
#include "defedavg/numerics.hpp"

namespace defedavg {

namespace {

void check_common(std::size_t n, std::size_t K, const ProblemConstants& c, std::size_t T,
                  double lambda, const char* who) {
  const std::string w(who);
  if (n == 0 || K == 0 || T == 0) throw NumericError(w + ": n, K and T must be positive");
  if (!(lambda >= 1.0)) throw NumericError(w + ": lambda must be at least 1");
  if (!(c.L > 0.0)) throw NumericError(w + ": smoothness L must be positive");
  if (c.gap < 0.0) throw NumericError(w + ": F(w0) - F* must be nonnegative");
  if (c.sigma < 0.0 || c.G < 0.0 || c.nu < 0.0) {
    throw NumericError(w + ": sigma, G and nu must be nonnegative");
  }
}

void finish(RatePlan& plan) {
  plan.conditions_satisfied = true;
  double worst = -1.0;
  for (const auto& cond : plan.conditions) {
    plan.conditions_satisfied = plan.conditions_satisfied && cond.holds;
    const double ratio = cond.rhs > 0.0 ? cond.lhs / cond.rhs : std::numeric_limits<double>::infinity();
    if (ratio > worst) {
      worst = ratio;
      plan.binding_constraint = cond.name;
    }
  }
}

RateCondition make_condition(std::string name, double lhs, double rhs) {
  return RateCondition{std::move(name), lhs, rhs, lhs <= rhs};
}

}  // namespace

RatePlan niid_rates(std::size_t n, std::size_t K, const ProblemConstants& c, std::size_t T,
                    double lambda) {
  check_common(n, K, c, T, lambda, "niid_rates");
  const double nd = static_cast<double>(n);
  const double Kd = static_cast<double>(K);
  const double Td = static_cast<double>(T);
  const double s2 = c.sigma * c.sigma;
  const double G2 = c.G * c.G;
  const double noise = 4.0 * s2 * c.L + 2.0 * c.L * Kd * G2;
  if (!(noise > 0.0)) {
    throw NumericError(
        "niid_rates: 4 sigma^2 L + 2 L K G^2 is zero, so the local rate formula divides by "
        "zero; use a tuned preset (rate_source = preset) instead");
  }
  RatePlan plan;
  plan.eta = std::sqrt(4.0 * nd * Kd * c.gap);
  plan.eta_bar = 1.0 / (std::sqrt(noise * Td) * Kd);

  const double prod = plan.eta * plan.eta_bar;
  const double first = 1.0 / (4.0 * c.L * Kd * lambda);
  const double second = (2.0 * s2 + G2 * Kd) /
                        (8.0 * s2 * c.L * Kd * lambda + 4.0 * c.L * G2 * Kd * Kd * lambda * lambda);
  plan.conditions.push_back(make_condition("eta_bar <= 1/(8 L K)", plan.eta_bar, 1.0 / (8.0 * c.L * Kd)));
  plan.conditions.push_back(make_condition(
      std::string("eta*eta_bar <= min{1/(4 L K lambda), (2 sigma^2 + G^2 K)/(8 sigma^2 L K lambda + "
                  "4 L G^2 K^2 lambda^2)} [active term: ") +
          (first <= second ? "1/(4 L K lambda)]" : "(2 sigma^2 + G^2 K)/(...)]"),
      prod, std::min(first, second)));
  finish(plan);

  plan.bound_at_T =
      std::sqrt(256.0 * c.gap * (16.0 * s2 * c.L + 8.0 * c.L * G2 * Kd) / (nd * Kd * Td)) +
      (s2 + 8.0 * Kd * c.nu * c.nu) * 8.0 * c.L * c.L / (noise * Kd * Td);
  return plan;
}

RatePlan iid_rates(std::size_t n, std::size_t K, const ProblemConstants& c, std::size_t T,
                   double lambda) {
  check_common(n, K, c, T, lambda, "iid_rates");
  if (!(c.sigma > 0.0)) {
    throw NumericError(
        "iid_rates: sigma = 0 makes the local rate formula divide by zero; use a tuned preset "
        "(rate_source = preset) instead");
  }
  const double nd = static_cast<double>(n);
  const double Kd = static_cast<double>(K);
  const double Td = static_cast<double>(T);
  RatePlan plan;
  plan.eta = std::sqrt(nd * Kd * c.gap / 2.0);
  plan.eta_bar = 1.0 / (std::sqrt(c.sigma * c.sigma * c.L * Td) * Kd);
  plan.conditions.push_back(make_condition("eta_bar <= 1/(4 sqrt(3) L K)", plan.eta_bar,
                                           1.0 / (4.0 * std::sqrt(3.0) * c.L * Kd)));
  plan.conditions.push_back(make_condition("eta*eta_bar <= 1/(4 L K lambda)",
                                           plan.eta * plan.eta_bar,
                                           1.0 / (4.0 * c.L * Kd * lambda)));
  finish(plan);
  plan.bound_at_T = std::sqrt(128.0 * c.gap / (nd * Kd * Td)) + 8.0 * c.L / (Kd * Td);
  return plan;
}

double inclusion_probability(std::size_t N, std::size_t n) {
  if (N == 0 || n == 0) throw NumericError("inclusion_probability: N and n must be positive");
  if (N == 1) return 1.0;
  return -std::expm1(static_cast<double>(n) * std::log1p(-1.0 / static_cast<double>(N)));
}

std::size_t lambda_bound(std::size_t N, std::size_t n, std::size_t T, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw NumericError("lambda_bound: delta must lie in (0, 1)");
  if (T == 0) throw NumericError("lambda_bound: T must be positive");
  const double p = inclusion_probability(N, n);
  const double value =
      (1.0 + std::log(static_cast<double>(N) * static_cast<double>(T) / delta)) / p;
  return static_cast<std::size_t>(std::ceil(value));
}

ConstantEstimates estimate_constants(const Problem& problem, std::size_t probe_points,
                                     std::size_t samples_per_point, RngStream& rng,
                                     std::size_t batch, double probe_scale) {
  if (probe_points == 0 || samples_per_point == 0) {
    throw NumericError("estimate_constants: counts must be at least 1");
  }
  const Weights w0 = problem.initial_weights();
  std::vector<Weights> probes;
  for (std::size_t p = 0; p < probe_points; ++p) {
    Weights w = w0;
    for (double& v : w) v += probe_scale * rng.normal();
    probes.push_back(std::move(w));
  }
  double sigma2 = 0.0, G2 = 0.0, nu2 = 0.0, L = 0.0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const Weights& w = probes[p];
    const Weights full = problem.gradient(w);
    for (std::size_t i = 0; i < problem.num_clients(); ++i) {
      const Weights gi = problem.client_gradient(i, w);
      G2 = std::max(G2, gi.norm_sq());
      nu2 = std::max(nu2, (gi - full).norm_sq());
      RunningStats noise;
      for (std::size_t s = 0; s < samples_per_point; ++s) {
        noise.add((stochastic_gradient(problem, i, w, batch, rng) - gi).norm_sq());
      }
      sigma2 = std::max(sigma2, noise.mean());
      const Weights& other = probes[(p + 1) % probes.size()];
      const double dist = (w - other).norm();
      if (dist > 0.0) {
        L = std::max(L, (gi - problem.client_gradient(i, other)).norm() / dist);
      }
    }
  }
  ConstantEstimates out;
  out.constants.L = L > 0.0 ? L : 1.0;
  out.constants.sigma = std::sqrt(sigma2);
  out.constants.G = std::sqrt(G2);
  out.constants.nu = std::sqrt(nu2);
  if (auto opt = problem.known_optimum()) {
    out.constants.gap = problem.loss(w0) - opt->value;
    out.gap_is_exact = true;
  } else {
    out.constants.gap = problem.loss(w0);
  }
  return out;
}

UnbiasednessReport mc_unbiasedness_check(const std::vector<Weights>& deltas, std::size_t n,
                                         std::size_t trials, RngStream& rng,
                                         const MultisetSampler& sampler) {
  if (deltas.empty()) throw NumericError("mc_unbiasedness_check: no deltas");
  if (n == 0) throw NumericError("mc_unbiasedness_check: n must be positive");
  if (trials < 1000) throw NumericError("mc_unbiasedness_check: need at least 1000 trials");
  const std::size_t N = deltas.size();
  const std::size_t d = deltas.front().dim();
  UnbiasednessReport rep;
  rep.exact_mean = Weights(d);
  for (const auto& v : deltas) {
    require_same_dim(rep.exact_mean, v, "mc_unbiasedness_check");
    rep.exact_mean += v;
  }
  rep.exact_mean *= 1.0 / static_cast<double>(N);

  VectorStats stats(d);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto picks = sampler ? sampler(N, n, rng) : sample_with_replacement(N, n, rng);
    if (picks.size() != n) throw NumericError("mc_unbiasedness_check: sampler returned wrong size");
    Weights g(d);
    for (std::size_t c : picks) g += deltas.at(c);
    g *= 1.0 / static_cast<double>(n);
    stats.add(g);
  }
  rep.mc_mean = stats.mean();
  rep.standard_error = stats.standard_error();
  rep.passed = true;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = std::abs(rep.mc_mean[j] - rep.exact_mean[j]);
    const double se = rep.standard_error[j];
    // A degenerate band (all samples identical) demands equality up to rounding.
    const double tol = se > 0.0 ? 4.0 * se : 1e-12 * std::max(1.0, std::abs(rep.exact_mean[j]));
    if (se > 0.0) rep.max_z = std::max(rep.max_z, diff / se);
    if (diff > tol) rep.passed = false;
  }
  return rep;
}

VarianceReport mc_variance_check(const Problem& problem, std::size_t n, std::size_t K,
                                 std::size_t trials, RngStream& rng, double eta_bar,
                                 NoiseSharing sharing) {
  const auto sigma = problem.exact_sigma();
  if (!sigma) throw NumericError("mc_variance_check: problem has no exact sigma");
  if (n == 0 || K == 0 || trials == 0) {
    throw NumericError("mc_variance_check: n, K and trials must be positive");
  }
  const std::size_t N = problem.num_clients();
  const double s2 = *sigma * *sigma;
  const double nK = static_cast<double>(n * K);
  VarianceReport rep;
  rep.stated_bound = 2.0 * nK * s2;
  rep.reference = sharing == NoiseSharing::independent
                      ? nK * s2
                      : static_cast<double>(n) * static_cast<double>(N + n - 1) /
                            static_cast<double>(N) * static_cast<double>(K) * s2;
  if (s2 == 0.0) {
    rep.trivial = rep.within_reference = rep.below_bound = rep.passed = true;
    return rep;
  }

  const Weights w0 = problem.initial_weights();
  RunningStats stats;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    auto picks = sample_with_replacement(N, n, rng);
    Weights total(problem.dim());
    auto run_client = [&](std::size_t client, double weight) {
      Weights w = w0;
      for (std::size_t k = 0; k < K; ++k) {
        Weights g = stochastic_gradient(problem, client, w, 1, rng);
        total.axpy(weight, g - problem.client_gradient(client, w));
        w.axpy(-eta_bar, g);
      }
    };
    if (sharing == NoiseSharing::shared_duplicates) {
      std::map<std::size_t, std::size_t> multiplicity;
      for (std::size_t c : picks) ++multiplicity[c];
      for (const auto& [client, m] : multiplicity) run_client(client, static_cast<double>(m));
    } else {
      for (std::size_t c : picks) run_client(c, 1.0);
    }
    stats.add(total.norm_sq());
  }
  rep.empirical = stats.mean();
  rep.standard_error = stats.standard_error();
  rep.within_reference = std::abs(rep.empirical - rep.reference) <= 4.0 * rep.standard_error;
  rep.below_bound = rep.empirical <= rep.stated_bound + 4.0 * rep.standard_error;
  rep.passed = rep.within_reference && rep.below_bound;
  return rep;
}

}  // namespace defedavg
