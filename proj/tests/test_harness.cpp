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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "cli.hpp"
#include "defedavg/config.hpp"
#include "defedavg/error.hpp"
#include "defedavg/metrics.hpp"
#include "defedavg/presets.hpp"
#include "defedavg/simulator.hpp"
#include "defedavg/sweep.hpp"

namespace defedavg {
namespace {

const std::string kConfigDir = DEFEDAVG_CONFIG_DIR;

constexpr const char* kQuadratic = R"(
[problem]
kind = quadratic
clients = 16
dim = 6
hetero_nu = 0.3
sigma = 0.5

[algorithm]
kind = defedavg_niid
n = 4
K = 3
eta = 1.0
eta_bar = 0.05

[system]
preset = fashionmnist

[run]
T = 40
batch = 1
seed = 3
eval_every = 10
)";

std::string error_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("defedavg_test_" + name);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, Defaults) {
  const auto c = parse_config("[run]\nT = 5\n");
  EXPECT_EQ(c.problem.clients, 100u);
  EXPECT_EQ(c.policy.K, 50u);
  EXPECT_EQ(c.batch, 10u);
  EXPECT_EQ(c.system.bandwidth_down, 400e6);
  EXPECT_EQ(c.system.bandwidth_up, 400e6);
  EXPECT_EQ(c.system.c_mac, 10e9);
  EXPECT_EQ(c.system.speed_min, 1.0);
  EXPECT_EQ(c.system.speed_max, 5.0);
  EXPECT_EQ(c.T, 5u);
}

TEST(Config, MissingT) {
  EXPECT_NE(error_of("[run]\n").find("missing key run.T"), std::string::npos);
}

TEST(Config, UnknownKeyHasLineNumber) {
  const auto e = error_of("[run]\nT = 5\n\n[algorithm]\netabar = 0.1\n");
  EXPECT_NE(e.find("line 5"), std::string::npos) << e;
  EXPECT_NE(e.find("etabar"), std::string::npos) << e;
}

TEST(Config, TypeMismatchAndUnknownSection) {
  EXPECT_NE(error_of("[run]\nT = many\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("[runs]\nT = 5\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("[run]\nT = 5\nT = 6\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of("T = 5\n"), "");
  EXPECT_NE(error_of("[run]\nT 5\n").find("line 2"), std::string::npos);
}

TEST(Config, NLargerThanN) {
  const auto e = error_of("[problem]\nclients = 100\n[algorithm]\nn = 200\n[run]\nT = 5\n");
  EXPECT_NE(e, "");
  EXPECT_NE(e.find("line"), std::string::npos) << e;
}

TEST(Config, CommentsAndWhitespace) {
  const auto c = parse_config("# header\n[run]  \n  T = 7   # trailing\n\n");
  EXPECT_EQ(c.T, 7u);
}

TEST(Config, PresetCell) {
  auto c = parse_config("[algorithm]\nkind = defedavg_iid\npreset = defedavg_iid/fashionmnist/n10\n[run]\nT = 5\n");
  const auto rc = to_run_config(c);
  EXPECT_DOUBLE_EQ(rc.policy.eta, 0.10);
  EXPECT_DOUBLE_EQ(rc.policy.eta_bar, 0.05);
  EXPECT_THROW(apply_preset(c, "nope/nope/n1"), ConfigError);
}

TEST(Config, ClosedFormRatesResolve) {
  const auto c = load_config(kConfigDir + "/iid_rate_example.ini");
  const auto rc = to_run_config(c);
  EXPECT_NEAR(rc.policy.eta, 22.3607, 1e-4);
  EXPECT_NEAR(rc.policy.eta_bar, 2e-4, 1e-15);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigDir)) {
    if (entry.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(to_run_config(load_config(entry.path()))) << entry.path();
  }
}

TEST(Config, MissingFileNamesPath) {
  try {
    load_config("/definitely/not/here.ini");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/definitely/not/here.ini"), std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// Presets

TEST(Presets, TableCells) {
  const auto iid10 = find_rate_preset("defedavg_iid/fashionmnist/n10");
  ASSERT_TRUE(iid10);
  EXPECT_EQ(iid10->eta, 0.10);
  EXPECT_EQ(iid10->eta_bar, 0.05);
  EXPECT_FALSE(find_rate_preset("defedavg_iid/fashionmnist/n11"));
  std::set<std::string> names;
  for (const auto& p : rate_presets()) {
    EXPECT_TRUE(names.insert(p.name).second) << "duplicate " << p.name;
    EXPECT_GT(p.eta, 0.0);
    EXPECT_GT(p.eta_bar, 0.0);
  }
}

TEST(Presets, SystemAndTargets) {
  const auto f = system_preset("fashionmnist");
  ASSERT_TRUE(f);
  EXPECT_EQ(f->flops_per_iter, 17e6);
  EXPECT_EQ(f->model_bytes, 2.2e6);
  const auto c = system_preset("cifar10");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->model_bytes, 3.53e6);
  EXPECT_FALSE(system_preset("imagenet"));
  EXPECT_EQ(accuracy_target("fashionmnist", true), 0.9);
  EXPECT_EQ(accuracy_target("fashionmnist", false), 0.8);
  EXPECT_EQ(accuracy_target("cifar10", true), 0.7);
  EXPECT_EQ(accuracy_target("cifar10", false), 0.6);
}

// ---------------------------------------------------------------------------
// Metrics

TEST(Metrics, FormatDoubleRoundTrips) {
  RngStream rng = derive_stream(1, "test/fmt");
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.uniform_index(200)) - 100);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Metrics, CsvShapeAndRoundTrip) {
  auto cfg = to_run_config(parse_config(kQuadratic));
  cfg.T = 30;
  const auto r = run(cfg);
  // Eval points 0, 10, 20, 30.
  const std::string csv = metrics_csv(r.rows);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, kMetricsHeader);
  std::size_t count = 0;
  for (std::string line; std::getline(lines, line);) {
    ++count;
    EXPECT_NE(line.find(",,"), std::string::npos) << "empty test_acc field expected: " << line;
  }
  EXPECT_EQ(count, 4u);
  const auto parsed = parse_metrics_csv(csv);
  ASSERT_EQ(parsed.size(), r.rows.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].round, r.rows[i].round);
    EXPECT_EQ(parsed[i].wall_clock, r.rows[i].wall_clock);
    EXPECT_EQ(parsed[i].train_loss, r.rows[i].train_loss);
    EXPECT_EQ(parsed[i].grad_norm_sq, r.rows[i].grad_norm_sq);
    EXPECT_EQ(parsed[i].mean_staleness, r.rows[i].mean_staleness);
    EXPECT_EQ(parsed[i].max_staleness, r.rows[i].max_staleness);
    EXPECT_FALSE(parsed[i].test_accuracy);
    if (i > 0) {
      EXPECT_GE(parsed[i].wall_clock, parsed[i - 1].wall_clock);
    }
  }
  EXPECT_EQ(metrics_csv(parsed), csv);
}

TEST(Metrics, RerunIsByteIdentical) {
  const auto cfg = to_run_config(parse_config(kQuadratic));
  const auto a = temp_path("a.csv");
  const auto b = temp_path("b.csv");
  write_metrics_csv(run(cfg), a);
  write_metrics_csv(run(cfg), b);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_FALSE(read_file(a).empty());
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Metrics, AccuracyColumnRoundTrips) {
  std::vector<MetricsRow> rows(2);
  rows[0].test_accuracy = 0.123456789;
  rows[1].round = 5;
  rows[1].wall_clock = 1.5;
  const auto parsed = parse_metrics_csv(metrics_csv(rows));
  EXPECT_EQ(parsed[0].test_accuracy, 0.123456789);
  EXPECT_FALSE(parsed[1].test_accuracy);
}

TEST(Metrics, MalformedCsv) {
  EXPECT_THROW(parse_metrics_csv("nope\n1,2\n"), DataError);
  EXPECT_THROW(parse_metrics_csv(std::string(kMetricsHeader) + "\n1,2,3\n"), DataError);
  EXPECT_THROW(parse_metrics_csv(std::string(kMetricsHeader) + "\nx,0,0,0,,0,0\n"), DataError);
}

TEST(Metrics, UnwritablePath) {
  EXPECT_THROW(write_text_file("/nonexistent_dir/x.csv", "x"), Error);
}

// ---------------------------------------------------------------------------
// Sweep

ExperimentConfig sweep_base() {
  auto c = parse_config(kQuadratic);
  c.T = 400;
  c.target_grad_norm_sq = 0.05;
  return c;
}

TEST(Sweep, RowsAndAggregate) {
  const auto cells = sweep(sweep_base(), {4}, {1, 2, 3});
  ASSERT_EQ(cells.size(), 3u);
  const std::string csv = sweep_csv(cells);
  std::istringstream in(csv);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 5u) << csv;
  EXPECT_EQ(lines[0], "n,seed,rounds_to_target,time_to_target");
  EXPECT_EQ(lines[4].rfind("4,mean,", 0), 0u) << lines[4];
  const auto summary = summarize(cells);
  ASSERT_EQ(summary.size(), 1u);
  EXPECT_EQ(summary[0].reached, 3u);
  double mean = 0.0;
  for (const auto& c : cells) mean += static_cast<double>(*c.rounds_to_target) / 3.0;
  EXPECT_NEAR(*summary[0].mean_rounds, mean, 1e-12);
}

TEST(Sweep, ParallelIsByteIdentical) {
  const auto base = sweep_base();
  const auto serial = sweep_csv(sweep(base, {2, 4, 8}, {1, 2, 3, 4}, 1));
  const auto parallel = sweep_csv(sweep(base, {2, 4, 8}, {1, 2, 3, 4}, 6));
  EXPECT_EQ(serial, parallel);
}

TEST(Sweep, UnreachedSentinel) {
  auto base = sweep_base();
  base.T = 3;
  base.target_grad_norm_sq = 1e-12;
  const auto cells = sweep(base, {4}, {1, 2});
  const auto csv = sweep_csv(cells);
  EXPECT_NE(csv.find("4,1,unreached,unreached"), std::string::npos) << csv;
  EXPECT_NE(csv.find("4,mean,unreached"), std::string::npos) << csv;
  EXPECT_FALSE(summarize(cells)[0].mean_rounds);
}

TEST(Sweep, MoreClientsReachTargetSooner) {
  auto base = sweep_base();
  base.problem.clients = 32;
  base.problem.hetero_nu = 0.0;
  base.problem.dim = 10;
  base.problem.sigma = 2.0;
  base.eval_every = 1;
  base.target_grad_norm_sq = 0.02;
  base.T = 3000;
  const auto summary = summarize(sweep(base, {2, 4, 8, 16}, {1, 2, 3, 4, 5}, 4));
  ASSERT_EQ(summary.size(), 4u);
  for (std::size_t i = 0; i < summary.size(); ++i) {
    ASSERT_TRUE(summary[i].mean_rounds) << "n = " << summary[i].n;
    if (i > 0) {
      EXPECT_LE(*summary[i].mean_rounds, *summary[i - 1].mean_rounds) << summary[i].n;
    }
  }
}

TEST(Sweep, NLargerThanClientsRejected) {
  EXPECT_THROW(sweep(sweep_base(), {17}, {1}), Error);
}

// ---------------------------------------------------------------------------
// CLI

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "defedavg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, RatesOnIidExample) {
  const auto r = cli({"rates", kConfigDir + "/iid_rate_example.ini"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("eta          = 22.36067977"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("eta_bar      = 0.0002"), std::string::npos) << r.out;
}

TEST(Cli, VerifySuitePasses) {
  const auto r = cli({"verify"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.out << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST(Cli, MissingConfigFile) {
  const auto r = cli({"run", "/no/such/config.ini"});
  EXPECT_EQ(r.code, cli::kExitConfig);
  EXPECT_NE(r.err.find("/no/such/config.ini"), std::string::npos) << r.err;
}

TEST(Cli, RunWritesCsvAndSeedOverrides) {
  const auto cfg = temp_path("cli.ini");
  write_text_file(cfg, kQuadratic);
  const auto a = cli({"run", cfg.string()});
  const auto b = cli({"run", cfg.string()});
  const auto c = cli({"run", cfg.string(), "--seed", "99"});
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out.rfind(std::string(kMetricsHeader), 0), 0u);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  const auto out = temp_path("cli_out.csv");
  EXPECT_EQ(cli({"run", cfg.string(), "--out", out.string()}).code, 0);
  EXPECT_EQ(read_file(out), a.out);
  std::filesystem::remove(cfg);
  std::filesystem::remove(out);
}

TEST(Cli, PresetOverride) {
  const auto cfg = temp_path("cli_preset.ini");
  write_text_file(cfg, kQuadratic);
  EXPECT_EQ(cli({"run", cfg.string(), "--preset", "defedavg_niid/fashionmnist/n5"}).code, 0);
  EXPECT_EQ(cli({"run", cfg.string(), "--preset", "bogus"}).code, cli::kExitConfig);
  std::filesystem::remove(cfg);
}

TEST(Cli, SweepUnreachedWarnsButSucceeds) {
  const auto cfg = temp_path("cli_sweep.ini");
  std::string text = kQuadratic;
  text += "target_grad_norm_sq = 1e-12\n";
  write_text_file(cfg, text);
  const auto r = cli({"sweep", cfg.string(), "--n", "2,4", "--seeds", "1..2"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("unreached"), std::string::npos);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  std::filesystem::remove(cfg);
}

TEST(Cli, GradcheckOnDataProblem) {
  const auto r = cli({"gradcheck", kConfigDir + "/logreg_iid.ini", "--probes", "3"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Cli, BadArguments) {
  EXPECT_NE(cli({"frobnicate"}).code, 0);
  EXPECT_EQ(cli({"sweep", kConfigDir + "/quadratic_niid.ini", "--n", "2..x"}).code, cli::kExitConfig);
}

TEST(Cli, ListParsing) {
  EXPECT_EQ(cli::parse_seed_list("1..3,7"), (std::vector<std::uint64_t>{1, 2, 3, 7}));
  EXPECT_EQ(cli::parse_n_list("2,4,8"), (std::vector<std::size_t>{2, 4, 8}));
  EXPECT_THROW(cli::parse_seed_list("3..1"), ConfigError);
  EXPECT_THROW(cli::parse_seed_list(""), ConfigError);
  EXPECT_THROW(cli::parse_n_list("0"), ConfigError);
}

TEST(Cli, BinaryExitCodes) {
  const std::string bin = DEFEDAVG_CLI_PATH;
  EXPECT_EQ(std::system((bin + " rates " + kConfigDir + "/iid_rate_example.ini > /dev/null").c_str()), 0);
  const int missing = std::system((bin + " run /no/such.ini 2> /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(missing), 1);
}

}  // namespace
}  // namespace defedavg
