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

#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "defedavg/config.hpp"
#include "defedavg/error.hpp"
#include "defedavg/metrics.hpp"
#include "defedavg/sweep.hpp"
#include "defedavg/theory.hpp"
#include "defedavg/verify.hpp"

namespace defedavg::cli {

namespace {

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError("bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::uint64_t> parse_list(std::string_view text, std::string_view what) {
  std::vector<std::uint64_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(start, comma - start);
    if (const auto dots = item.find(".."); dots != std::string_view::npos) {
      const auto lo = parse_u64(item.substr(0, dots), what);
      const auto hi = parse_u64(item.substr(dots + 2), what);
      if (hi < lo) throw ConfigError("empty range '" + std::string(item) + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(parse_u64(item, what));
    }
    start = comma + 1;
  }
  return out;
}

void print_plan(std::ostream& out, const char* title, const RatePlan& plan) {
  out << title << '\n'
      << "  eta          = " << format_double(plan.eta) << '\n'
      << "  eta_bar      = " << format_double(plan.eta_bar) << '\n'
      << "  bound_at_T   = " << format_double(plan.bound_at_T) << '\n'
      << "  conditions   = " << (plan.conditions_satisfied ? "satisfied" : "violated") << '\n'
      << "  binding      = " << plan.binding_constraint << '\n';
  for (const auto& c : plan.conditions) {
    out << "    [" << (c.holds ? "ok" : "FAIL") << "] " << c.name << ": " << format_double(c.lhs)
        << " <= " << format_double(c.rhs) << '\n';
  }
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
  std::string out_path;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.preset) apply_preset(cfg, *c.preset);
  return cfg;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) { return parse_list(text, "seed"); }

std::vector<std::size_t> parse_n_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (auto v : parse_list(text, "n value")) {
    if (v == 0) throw ConfigError("n value must be at least 1");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-event simulator for asynchronous federated averaging"};
  app.require_subcommand(1);

  Common run_opts, sweep_opts, rates_opts, grad_opts;
  auto add_common = [](CLI::App* sub, Common& c, bool with_out) {
    sub->add_option("config", c.config, "Config file")->required();
    sub->add_option("--seed", c.seed, "Override run.seed");
    sub->add_option("--preset", c.preset, "Override the learning rates with a named preset");
    if (with_out) sub->add_option("--out", c.out_path, "Output path (default: stdout)");
  };

  auto* run_cmd = app.add_subcommand("run", "Single run, metrics CSV");
  add_common(run_cmd, run_opts, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "Rounds and time to target over n and seeds");
  add_common(sweep_cmd, sweep_opts, true);
  std::string n_text, seeds_text = "1";
  std::size_t threads = 1;
  sweep_cmd->add_option("--n", n_text, "Participants per round, e.g. 2,4,8")->required();
  sweep_cmd->add_option("--seeds", seeds_text, "Seeds, e.g. 1..10");
  sweep_cmd->add_option("--threads", threads, "Parallel workers");

  auto* verify_cmd = app.add_subcommand("verify", "Invariant suite on synthetic problems");
  std::uint64_t verify_seed = 1;
  verify_cmd->add_option("--seed", verify_seed, "Root seed");

  auto* rates_cmd = app.add_subcommand("rates", "Closed-form learning rates and step-size conditions");
  add_common(rates_cmd, rates_opts, false);

  auto* grad_cmd = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  add_common(grad_cmd, grad_opts, false);
  std::size_t probes = 20;
  double h = 1e-6;
  grad_cmd->add_option("--probes", probes, "Random probe points");
  grad_cmd->add_option("--step", h, "Finite-difference step h");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      const ExperimentConfig cfg = load(run_opts);
      const RunResult r = run(to_run_config(cfg));
      emit(metrics_csv(r.rows), run_opts.out_path, out);
      err << "rounds " << r.rounds_completed << ", wall clock "
          << format_double(r.rows.back().wall_clock) << " s, lambda-hat "
          << staleness_report(r).max_staleness << '\n';
      return kExitOk;
    }
    if (*sweep_cmd) {
      const ExperimentConfig cfg = load(sweep_opts);
      const auto cells = sweep(cfg, parse_n_list(n_text), parse_seed_list(seeds_text), threads);
      emit(sweep_csv(cells), sweep_opts.out_path, out);
      std::size_t unreached = 0;
      for (const auto& c : cells) unreached += c.rounds_to_target ? 0 : 1;
      if (unreached > 0) {
        err << "warning: " << unreached << " of " << cells.size()
            << " runs did not reach the target within T rounds\n";
      }
      return kExitOk;
    }
    if (*verify_cmd) {
      bool ok = true;
      for (const auto& v : run_verify_suite(verify_seed)) {
        out << (v.passed ? "PASS " : "FAIL ") << v.name << " (" << v.detail << ")\n";
        ok = ok && v.passed;
      }
      return ok ? kExitOk : kExitVerify;
    }
    if (*rates_cmd) {
      const ExperimentConfig cfg = load(rates_opts);
      const ProblemPtr problem = build_problem(cfg);
      const ProblemConstants k = problem_constants(cfg, *problem);
      const double lambda = rate_lambda(cfg);
      out << "constants: L = " << format_double(k.L) << ", sigma = " << format_double(k.sigma)
          << ", G = " << format_double(k.G) << ", nu = " << format_double(k.nu)
          << ", gap = " << format_double(k.gap) << '\n'
          << "n = " << cfg.policy.n << ", K = " << cfg.policy.K << ", T = " << cfg.T
          << ", lambda = " << format_double(lambda) << '\n';
      bool any = false;
      for (int which = 0; which < 2; ++which) {
        try {
          const RatePlan plan = which == 0 ? iid_rates(cfg.policy.n, cfg.policy.K, k, cfg.T, lambda)
                                           : niid_rates(cfg.policy.n, cfg.policy.K, k, cfg.T, lambda);
          print_plan(out, which == 0 ? "iid (first-n arrivals):" : "niid (sampled with replacement):", plan);
          any = true;
        } catch (const NumericError& e) {
          out << (which == 0 ? "iid" : "niid") << ": " << e.what() << '\n';
        }
      }
      return any ? kExitOk : kExitConfig;
    }
    if (*grad_cmd) {
      const ExperimentConfig cfg = load(grad_opts);
      const ProblemPtr problem = build_problem(cfg);
      RngStream rng = derive_stream(cfg.seed, "gradcheck/probes");
      const auto rep = gradient_check(*problem, probes, cfg.batch, h, rng);
      const bool ok = rep.max_relative_error <= 1e-5;
      out << (ok ? "PASS" : "FAIL") << " gradcheck " << to_string(problem->kind()) << ": "
          << rep.probes << " probes, max relative L2 error " << format_double(rep.max_relative_error)
          << '\n';
      return ok ? kExitOk : kExitVerify;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace defedavg::cli
