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

#include "defedavg/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "defedavg/error.hpp"
#include "defedavg/presets.hpp"

namespace defedavg {

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"problem",
       {"kind", "clients", "seed", "dim", "hetero_nu", "sigma", "initial_gap", "G", "dataset",
        "images", "labels", "test_images", "test_labels", "samples", "test_samples", "features",
        "classes", "separation", "partition", "l2", "hidden"}},
      {"algorithm",
       {"kind", "n", "K", "eta", "eta_bar", "preset", "send_policy", "client_mode",
        "rate_source", "lambda"}},
      {"system",
       {"preset", "c_mac", "flops_per_iter", "model_bytes", "bandwidth_down", "bandwidth_up",
        "speed_min", "speed_max"}},
      {"run",
       {"T", "batch", "seed", "eval_every", "max_sim_time", "target_grad_norm_sq",
        "target_accuracy"}},
  };
  return keys;
}

class Document {
 public:
  explicit Document(std::string_view text) {
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto end = std::min(text.find('\n', pos), text.size());
      std::string_view raw = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      const std::string_view line = trim(raw);
      if (line.empty()) {
        if (end == text.size()) break;
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("malformed section header", line_no);
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (!known_keys().count(section)) {
          throw ConfigError("unknown section [" + section + "]", line_no);
        }
        seen_sections_.insert(section);
      } else {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key = value", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line_no);
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (!known_keys().at(section).count(key)) {
          throw ConfigError("unknown key " + section + "." + key, line_no);
        }
        const std::string full = section + "." + key;
        if (entries_.count(full)) throw ConfigError("duplicate key " + full, line_no);
        entries_[full] = Entry{value, line_no};
      }
      if (end == text.size()) break;
    }
  }

  const Entry* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t line(const std::string& key) const {
    const Entry* e = find(key);
    return e ? e->line : 0;
  }

  std::optional<std::string> str(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    return e->value;
  }

  std::optional<double> real(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    double v = 0.0;
    const char* b = e->value.data();
    const char* end = b + e->value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end) {
      throw ConfigError(key + " expects a number, got '" + e->value + "'", e->line);
    }
    if (!std::isfinite(v)) throw ConfigError(key + " must be finite", e->line);
    return v;
  }

  std::optional<std::uint64_t> integer(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    std::uint64_t v = 0;
    const char* b = e->value.data();
    const char* end = b + e->value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end) {
      throw ConfigError(key + " expects a nonnegative integer, got '" + e->value + "'", e->line);
    }
    return v;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::set<std::string> seen_sections_;
};

template <class T>
void set_if(std::optional<T> v, T& out) {
  if (v) out = *v;
}

void set_size(const Document& doc, const std::string& key, std::size_t& out) {
  if (auto v = doc.integer(key)) out = static_cast<std::size_t>(*v);
}

void require(bool ok, const std::string& message, std::size_t line) {
  if (!ok) throw ConfigError(message, line);
}

std::string default_preset_name(const ExperimentConfig& c) {
  std::string algo;
  switch (c.policy.kind) {
    case AlgorithmKind::fedavg:
      algo = c.problem.partition == PartitionScheme::iid ? "fedavg_iid" : "fedavg_niid";
      break;
    default: algo = std::string(to_string(c.policy.kind));
  }
  return algo + "/fashionmnist/n" + std::to_string(c.policy.n);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  Document doc(text);
  ExperimentConfig c;

  // [problem]
  if (auto v = doc.str("problem.kind")) {
    if (*v == "quadratic") c.problem.kind = ProblemKind::quadratic;
    else if (*v == "logreg") c.problem.kind = ProblemKind::logreg;
    else if (*v == "mlp") c.problem.kind = ProblemKind::mlp;
    else throw ConfigError("problem.kind must be quadratic, logreg or mlp", doc.line("problem.kind"));
  }
  set_size(doc, "problem.clients", c.problem.clients);
  require(c.problem.clients >= 1, "problem.clients must be at least 1", doc.line("problem.clients"));
  if (auto v = doc.integer("problem.seed")) c.problem.seed = *v;
  set_size(doc, "problem.dim", c.problem.dim);
  require(c.problem.dim >= 1, "problem.dim must be at least 1", doc.line("problem.dim"));
  set_if(doc.real("problem.hetero_nu"), c.problem.hetero_nu);
  set_if(doc.real("problem.sigma"), c.problem.sigma);
  set_if(doc.real("problem.initial_gap"), c.problem.initial_gap);
  require(c.problem.hetero_nu >= 0.0, "problem.hetero_nu must be nonnegative", doc.line("problem.hetero_nu"));
  require(c.problem.sigma >= 0.0, "problem.sigma must be nonnegative", doc.line("problem.sigma"));
  require(c.problem.initial_gap >= 0.0, "problem.initial_gap must be nonnegative", doc.line("problem.initial_gap"));
  if (auto v = doc.real("problem.G")) {
    require(*v >= 0.0, "problem.G must be nonnegative", doc.line("problem.G"));
    c.problem.G = v;
  }
  set_if(doc.str("problem.dataset"), c.problem.dataset);
  if (c.problem.dataset != "synthetic" && c.problem.dataset != "fashionmnist" && c.problem.dataset != "idx") {
    throw ConfigError("problem.dataset must be synthetic, fashionmnist or idx", doc.line("problem.dataset"));
  }
  set_if(doc.str("problem.images"), c.problem.images);
  set_if(doc.str("problem.labels"), c.problem.labels);
  set_if(doc.str("problem.test_images"), c.problem.test_images);
  set_if(doc.str("problem.test_labels"), c.problem.test_labels);
  if (c.problem.dataset == "idx") {
    require(!c.problem.images.empty() && !c.problem.labels.empty(),
            "problem.dataset = idx needs problem.images and problem.labels", doc.line("problem.dataset"));
  }
  set_size(doc, "problem.samples", c.problem.samples);
  if (c.problem.samples > 0) c.problem.synthetic.train_samples = c.problem.samples;
  set_size(doc, "problem.test_samples", c.problem.synthetic.test_samples);
  set_size(doc, "problem.features", c.problem.synthetic.features);
  set_size(doc, "problem.classes", c.problem.synthetic.classes);
  set_if(doc.real("problem.separation"), c.problem.synthetic.separation);
  require(c.problem.synthetic.features >= 1, "problem.features must be at least 1", doc.line("problem.features"));
  require(c.problem.synthetic.classes >= 2, "problem.classes must be at least 2", doc.line("problem.classes"));
  if (auto v = doc.str("problem.partition")) {
    if (*v == "iid") c.problem.partition = PartitionScheme::iid;
    else if (*v == "two_class") c.problem.partition = PartitionScheme::two_class;
    else throw ConfigError("problem.partition must be iid or two_class", doc.line("problem.partition"));
  }
  set_if(doc.real("problem.l2"), c.problem.l2);
  require(c.problem.l2 >= 0.0, "problem.l2 must be nonnegative", doc.line("problem.l2"));
  set_size(doc, "problem.hidden", c.problem.hidden);
  require(c.problem.hidden >= 1, "problem.hidden must be at least 1", doc.line("problem.hidden"));

  // [algorithm]
  if (auto v = doc.str("algorithm.kind")) {
    auto k = parse_algorithm_kind(*v);
    if (!k) {
      throw ConfigError("algorithm.kind must be one of fedavg, defedavg_niid, defedavg_iid, fedbuff, asysg",
                        doc.line("algorithm.kind"));
    }
    c.policy.kind = *k;
  }
  set_size(doc, "algorithm.n", c.policy.n);
  require(c.policy.n >= 1, "algorithm.n must be at least 1", doc.line("algorithm.n"));
  require(c.policy.n <= c.problem.clients,
          "algorithm.n = " + std::to_string(c.policy.n) + " exceeds problem.clients = " +
              std::to_string(c.problem.clients),
          doc.line("algorithm.n"));
  set_size(doc, "algorithm.K", c.policy.K);
  if (c.policy.kind == AlgorithmKind::asysg) {
    require(!doc.find("algorithm.K") || c.policy.K == 1, "asysg runs one local step; algorithm.K must be 1",
            doc.line("algorithm.K"));
    c.policy.K = 1;
  }
  require(c.policy.K >= 1, "algorithm.K must be at least 1", doc.line("algorithm.K"));
  if (auto v = doc.str("algorithm.send_policy")) {
    auto p = parse_send_policy(*v);
    if (!p) {
      throw ConfigError("algorithm.send_policy must be always_overwrite or overwrite_on_select",
                        doc.line("algorithm.send_policy"));
    }
    c.policy.send_policy = *p;
  }
  if (auto v = doc.str("algorithm.client_mode")) {
    auto m = parse_client_mode(*v);
    if (!m) throw ConfigError("algorithm.client_mode must be continuous or synchronous", doc.line("algorithm.client_mode"));
    c.client_mode = *m;
  }
  if (auto v = doc.real("algorithm.lambda")) {
    require(*v >= 1.0, "algorithm.lambda must be at least 1", doc.line("algorithm.lambda"));
    c.lambda = v;
  }
  if (auto v = doc.str("algorithm.rate_source")) {
    if (*v == "manual") c.rate_source = RateSource::manual;
    else if (*v == "preset") c.rate_source = RateSource::preset;
    else if (*v == "theorem") c.rate_source = RateSource::theorem;
    else if (*v == "theorem_local") c.rate_source = RateSource::theorem_local;
    else {
      throw ConfigError("algorithm.rate_source must be manual, preset, theorem or theorem_local",
                        doc.line("algorithm.rate_source"));
    }
  }

  const auto eta = doc.real("algorithm.eta");
  const auto eta_bar = doc.real("algorithm.eta_bar");
  if (eta) require(*eta >= 0.0, "algorithm.eta must be nonnegative", doc.line("algorithm.eta"));
  if (eta_bar) require(*eta_bar >= 0.0, "algorithm.eta_bar must be nonnegative", doc.line("algorithm.eta_bar"));
  if (auto v = doc.str("algorithm.preset")) {
    auto p = find_rate_preset(*v);
    if (!p) throw ConfigError("unknown preset '" + *v + "'", doc.line("algorithm.preset"));
    c.preset = *v;
    c.policy.eta = p->eta;
    c.policy.eta_bar = p->eta_bar;
    if (c.rate_source == RateSource::manual) c.rate_source = RateSource::preset;
  } else if (const bool single = c.policy.kind == AlgorithmKind::asysg;
             c.rate_source == RateSource::preset ||
             (c.rate_source == RateSource::manual &&
              (single ? !(eta || eta_bar) : !(eta && eta_bar)))) {
    const std::string name = default_preset_name(c);
    auto p = find_rate_preset(name);
    if (!p) {
      const char* missing = (!eta && !single) ? "algorithm.eta" : "algorithm.eta_bar";
      throw ConfigError(std::string("missing key ") + missing + " (and no preset cell " + name +
                            " to fall back on)",
                        doc.line("algorithm.n"));
    }
    c.preset = name;
    c.policy.eta = p->eta;
    c.policy.eta_bar = p->eta_bar;
  }
  if (c.policy.kind == AlgorithmKind::asysg) {
    // One rate: eta_bar. A user-facing "eta" on asysg means that rate.
    require(!(eta && eta_bar), "asysg has a single rate; give algorithm.eta or algorithm.eta_bar, not both",
            doc.line("algorithm.eta"));
    if (eta) c.policy.eta_bar = *eta;
    if (eta_bar) c.policy.eta_bar = *eta_bar;
    c.policy.eta = 1.0;
  } else {
    if (eta) c.policy.eta = *eta;
    if (eta_bar) c.policy.eta_bar = *eta_bar;
  }
  if (c.rate_source == RateSource::theorem_local) {
    require(eta.has_value() || c.preset.has_value(), "rate_source = theorem_local needs algorithm.eta",
            doc.line("algorithm.rate_source"));
  }

  // [system]
  set_if(doc.str("system.preset"), c.system_preset);
  auto sys = system_preset(c.system_preset);
  if (!sys) throw ConfigError("system.preset must be analytic, fashionmnist or cifar10", doc.line("system.preset"));
  c.system = *sys;
  set_if(doc.real("system.c_mac"), c.system.c_mac);
  set_if(doc.real("system.flops_per_iter"), c.system.flops_per_iter);
  set_if(doc.real("system.model_bytes"), c.system.model_bytes);
  set_if(doc.real("system.bandwidth_down"), c.system.bandwidth_down);
  set_if(doc.real("system.bandwidth_up"), c.system.bandwidth_up);
  set_if(doc.real("system.speed_min"), c.system.speed_min);
  set_if(doc.real("system.speed_max"), c.system.speed_max);
  require(c.system.c_mac > 0.0, "system.c_mac must be positive", doc.line("system.c_mac"));
  require(c.system.flops_per_iter >= 0.0, "system.flops_per_iter must be nonnegative", doc.line("system.flops_per_iter"));
  require(c.system.model_bytes >= 0.0, "system.model_bytes must be nonnegative", doc.line("system.model_bytes"));
  require(c.system.bandwidth_down > 0.0, "system.bandwidth_down must be positive", doc.line("system.bandwidth_down"));
  require(c.system.bandwidth_up > 0.0, "system.bandwidth_up must be positive", doc.line("system.bandwidth_up"));
  require(c.system.speed_min > 0.0, "system.speed_min must be positive", doc.line("system.speed_min"));
  require(c.system.speed_max >= c.system.speed_min, "system.speed_max must be at least system.speed_min",
          doc.line("system.speed_max"));

  // [run]
  if (auto v = doc.integer("run.T")) {
    c.T = static_cast<std::size_t>(*v);
    require(c.T >= 1, "run.T must be at least 1", doc.line("run.T"));
  } else {
    throw ConfigError("missing key run.T");
  }
  set_size(doc, "run.batch", c.batch);
  require(c.batch >= 1, "run.batch must be at least 1", doc.line("run.batch"));
  if (auto v = doc.integer("run.seed")) c.seed = *v;
  set_size(doc, "run.eval_every", c.eval_every);
  require(c.eval_every >= 1, "run.eval_every must be at least 1", doc.line("run.eval_every"));
  set_if(doc.real("run.max_sim_time"), c.max_sim_time);
  require(c.max_sim_time > 0.0, "run.max_sim_time must be positive", doc.line("run.max_sim_time"));
  c.target_grad_norm_sq = doc.real("run.target_grad_norm_sq");
  c.target_accuracy = doc.real("run.target_accuracy");
  if (!c.target_grad_norm_sq && !c.target_accuracy) {
    if (auto acc = accuracy_target(c.problem.dataset, c.problem.partition == PartitionScheme::iid);
        acc && c.problem.kind != ProblemKind::quadratic) {
      c.target_accuracy = acc;
    } else {
      c.target_grad_norm_sq = 0.01;
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_preset(ExperimentConfig& config, std::string_view name) {
  auto p = find_rate_preset(name);
  if (!p) throw ConfigError("unknown preset '" + std::string(name) + "'");
  config.preset = std::string(name);
  config.rate_source = RateSource::preset;
  config.policy.eta = p->eta;
  config.policy.eta_bar = p->eta_bar;
}

namespace {

std::filesystem::path data_dir() {
  const char* dir = std::getenv("DEFEDAVG_DATA_DIR");
  if (!dir || !*dir) {
    throw ConfigError("problem.dataset = fashionmnist needs DEFEDAVG_DATA_DIR pointing at the IDX files");
  }
  return dir;
}

Dataset truncate(Dataset d, std::size_t rows) {
  if (rows == 0 || rows >= d.rows) return d;
  d.rows = rows;
  d.features.resize(rows * d.cols);
  d.labels.resize(rows);
  return d;
}

}  // namespace

ProblemPtr build_problem(const ExperimentConfig& config) {
  const ProblemSpec& p = config.problem;
  const std::uint64_t seed = p.seed.value_or(config.seed);
  if (p.kind == ProblemKind::quadratic) {
    return make_quadratic(p.clients, p.dim, p.hetero_nu, p.sigma, seed, p.initial_gap);
  }

  std::shared_ptr<Dataset> train;
  std::shared_ptr<Dataset> test;
  if (p.dataset == "synthetic") {
    RngStream rng = derive_stream(seed, "problem/data/synthetic");
    SyntheticData data = make_synthetic_classification(p.synthetic, rng);
    train = std::make_shared<Dataset>(std::move(data.train));
    if (data.test.rows > 0) test = std::make_shared<Dataset>(std::move(data.test));
  } else {
    std::filesystem::path images, labels, test_images, test_labels;
    if (p.dataset == "fashionmnist") {
      const auto dir = data_dir();
      images = dir / "train-images-idx3-ubyte";
      labels = dir / "train-labels-idx1-ubyte";
      test_images = dir / "t10k-images-idx3-ubyte";
      test_labels = dir / "t10k-labels-idx1-ubyte";
    } else {
      images = p.images;
      labels = p.labels;
      test_images = p.test_images;
      test_labels = p.test_labels;
    }
    train = std::make_shared<Dataset>(truncate(load_idx_dataset(images, labels), p.samples));
    if (!test_images.empty() && !test_labels.empty()) {
      test = std::make_shared<Dataset>(load_idx_dataset(test_images, test_labels));
      test->num_classes = train->num_classes = std::max(train->num_classes, test->num_classes);
    }
  }
  RngStream part_rng = derive_stream(seed, "problem/partition");
  Partition partition = partition_dataset(*train, p.partition, p.clients, part_rng);
  if (p.kind == ProblemKind::logreg) return make_logreg(train, std::move(partition), p.l2, test);
  return make_mlp(train, std::move(partition), p.hidden, seed, test);
}

ProblemConstants problem_constants(const ExperimentConfig& config, const Problem& problem) {
  ProblemConstants c;
  const Weights w0 = problem.initial_weights();
  if (problem.exact_sigma() && problem.exact_smoothness() && problem.known_optimum()) {
    c.L = *problem.exact_smoothness();
    c.sigma = *problem.exact_sigma();
    c.nu = problem.exact_heterogeneity().value_or(0.0);
    c.gap = problem.loss(w0) - problem.known_optimum()->value;
    if (config.problem.G) {
      c.G = *config.problem.G;
    } else {
      // Max client gradient norm at the start point; an estimate, not a bound.
      double g2 = 0.0;
      for (std::size_t i = 0; i < problem.num_clients(); ++i) {
        g2 = std::max(g2, problem.client_gradient(i, w0).norm_sq());
      }
      c.G = std::sqrt(g2);
    }
    return c;
  }
  RngStream rng = derive_stream(config.seed, "theory/estimate_constants");
  c = estimate_constants(problem, 4, 200, rng, config.batch).constants;
  if (config.problem.G) c.G = *config.problem.G;
  return c;
}

double rate_lambda(const ExperimentConfig& config) {
  if (config.lambda) return *config.lambda;
  return static_cast<double>(lambda_bound(config.problem.clients, config.policy.n, config.T, 0.01));
}

RunConfig to_run_config(const ExperimentConfig& config) {
  RunConfig rc;
  rc.problem = build_problem(config);
  rc.policy = config.policy;
  if (config.rate_source == RateSource::theorem || config.rate_source == RateSource::theorem_local) {
    const ProblemConstants k = problem_constants(config, *rc.problem);
    const bool niid = config.policy.kind == AlgorithmKind::defedavg_niid ||
                      config.policy.kind == AlgorithmKind::fedavg ||
                      config.policy.kind == AlgorithmKind::fedbuff;
    const RatePlan plan = niid ? niid_rates(config.policy.n, config.policy.K, k, config.T, rate_lambda(config))
                               : iid_rates(config.policy.n, config.policy.K, k, config.T, rate_lambda(config));
    rc.policy.eta_bar = plan.eta_bar;
    if (config.rate_source == RateSource::theorem && config.policy.kind != AlgorithmKind::asysg) {
      rc.policy.eta = plan.eta;
    }
  }
  rc.T = config.T;
  rc.batch = config.batch;
  rc.root_seed = config.seed;
  rc.system = config.system;
  rc.client_mode = config.client_mode;
  rc.eval_every = config.eval_every;
  rc.max_sim_time = config.max_sim_time;
  rc.target_grad_norm_sq = config.target_grad_norm_sq;
  rc.target_accuracy = config.target_accuracy;
  return rc;
}

}  // namespace defedavg
