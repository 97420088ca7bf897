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

#include "defedavg/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <utility>

#include "defedavg/error.hpp"

namespace defedavg {

double compute_time(double speed_factor, std::size_t K, double flops_per_iter, double c_mac) {
  return static_cast<double>(K) * flops_per_iter * speed_factor / c_mac;
}

double comm_time(double model_bytes, double bandwidth_bits_per_s) {
  return 8.0 * model_bytes / bandwidth_bits_per_s;
}

std::string_view to_string(ClientMode mode) {
  return mode == ClientMode::continuous ? "continuous" : "synchronous";
}

std::optional<ClientMode> parse_client_mode(std::string_view text) {
  if (text == "continuous") return ClientMode::continuous;
  if (text == "synchronous") return ClientMode::synchronous;
  return std::nullopt;
}

void validate_run_config(const RunConfig& c) {
  if (!c.problem) throw SimulationError("run config has no problem");
  validate_policy(c.policy, c.problem->num_clients());
  if (c.T == 0) throw SimulationError("run config: T must be at least 1");
  if (c.batch == 0) throw SimulationError("run config: batch must be at least 1");
  if (c.eval_every == 0) throw SimulationError("run config: eval_every must be at least 1");
  const auto& s = c.system;
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(s.c_mac) || !positive(s.bandwidth_down) || !positive(s.bandwidth_up)) {
    throw SimulationError("system model: c_mac and bandwidths must be positive");
  }
  if (s.flops_per_iter < 0.0 || s.model_bytes < 0.0) {
    throw SimulationError("system model: flops_per_iter and model_bytes must be nonnegative");
  }
  if (!positive(s.speed_min) || s.speed_max < s.speed_min) {
    throw SimulationError("system model: need 0 < speed_min <= speed_max");
  }
  if (!s.speed_factors.empty()) {
    if (s.speed_factors.size() != c.problem->num_clients()) {
      throw SimulationError("system model: speed_factors has the wrong length");
    }
    for (double f : s.speed_factors) {
      if (!positive(f)) throw SimulationError("system model: speed factors must be positive");
    }
  }
  if (c.initial_weights && c.initial_weights->dim() != c.problem->dim()) {
    throw SimulationError("run config: initial weights have the wrong dimension");
  }
}

namespace {

enum class EventKind : int { training_done = 0, upload_arrive = 1, round_trigger = 2, broadcast_arrive = 3 };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::round_trigger;
  std::size_t client = 0;
  std::uint64_t seq = 0;
  std::optional<StampedModel> model;
  std::optional<LocalUpdate> update;
};

// Min-heap order: earliest time, then kind priority, client id, insertion.
struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
    if (a.client != b.client) return a.client > b.client;
    return a.seq > b.seq;
  }
};

struct ClientRuntime {
  ClientState state;
  bool busy = false;
  bool awaited = false;  // selected in the current sampled round, upload pending
  std::size_t rep_base = 0;
  std::size_t rep_next = 0;
  std::optional<LocalUpdate> in_flight;
};

class Engine {
 public:
  explicit Engine(const RunConfig& config) : cfg_(config), problem_(*config.problem) {
    N_ = problem_.num_clients();
    const auto& sys = cfg_.system;
    const double flops =
        sys.flops_per_iter > 0.0 ? sys.flops_per_iter : problem_.flops_per_iteration(cfg_.batch);
    const double bytes =
        sys.model_bytes > 0.0 ? sys.model_bytes : 8.0 * static_cast<double>(problem_.dim());
    down_ = comm_time(bytes, sys.bandwidth_down);
    up_ = comm_time(bytes, sys.bandwidth_up);

    std::vector<double> speeds = sys.speed_factors;
    if (speeds.empty()) {
      RngStream rng = derive_stream(cfg_.root_seed, "system/speeds");
      speeds.resize(N_);
      for (auto& s : speeds) s = rng.uniform(sys.speed_min, sys.speed_max);
    }
    clients_.resize(N_);
    train_time_.resize(N_);
    for (std::size_t i = 0; i < N_; ++i) {
      clients_[i].state.id = i;
      clients_[i].state.speed_factor = speeds[i];
      train_time_[i] = compute_time(speeds[i], cfg_.policy.K, flops, sys.c_mac);
    }
    result_.num_clients = N_;
    result_.speed_factors = std::move(speeds);

    server_.weights = cfg_.initial_weights ? *cfg_.initial_weights : problem_.initial_weights();
    server_.eta = cfg_.policy.eta;
    sync_ = cfg_.client_mode == ClientMode::synchronous || cfg_.policy.kind == AlgorithmKind::fedavg;
  }

  RunResult run() {
    record_row(0.0);
    if (!finished_) begin_round(0.0, cfg_.policy.kind != AlgorithmKind::fedavg);
    while (!finished_) {
      if (queue_.empty()) stuck();
      std::pop_heap(queue_.begin(), queue_.end(), Later{});
      Event ev = std::move(queue_.back());
      queue_.pop_back();
      if (ev.time > cfg_.max_sim_time) {
        result_.stopped_early = true;
        break;
      }
      ++result_.counters.events;
      now_ = ev.time;
      dispatch(ev);
    }
    if (result_.rows.empty() || result_.rows.back().round != server_.round) record_row(now_);
    result_.final_weights = server_.weights;
    result_.participation_log = std::move(server_.participation_log);
    result_.rounds_completed = server_.round;
    for (const auto& c : clients_) {
      result_.counters.stale_broadcasts += c.state.stale_broadcasts;
      result_.counters.dropped_updates += c.state.dropped_updates;
    }
    return std::move(result_);
  }

 private:
  bool arrival_mode() const { return !uses_sampling(cfg_.policy.kind); }

  void push(double time, EventKind kind, std::size_t client, std::optional<StampedModel> model = {},
            std::optional<LocalUpdate> update = {}) {
    queue_.push_back(Event{time, kind, client, seq_++, std::move(model), std::move(update)});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
  }

  void trace(TraceKind kind, std::size_t client, std::size_t round) {
    if (cfg_.record_trace) result_.trace.push_back({now_, kind, client, round});
  }

  [[noreturn]] void stuck() {
    std::string waiting;
    for (const auto& c : clients_) {
      if (c.awaited) waiting += (waiting.empty() ? "" : ", ") + std::to_string(c.state.id);
    }
    throw SimulationError(
        "event queue exhausted at round " + std::to_string(server_.round) + " of " +
        std::to_string(cfg_.T) + " (t = " + std::to_string(now_) + " s, " +
        std::to_string(arrivals_.size()) + " buffered uploads" +
        (waiting.empty() ? std::string() : ", waiting on clients " + waiting) + ")");
  }

  void dispatch(Event& ev) {
    switch (ev.kind) {
      case EventKind::broadcast_arrive: on_broadcast(ev.client, std::move(*ev.model)); break;
      case EventKind::training_done: on_training_done(ev.client); break;
      case EventKind::upload_arrive: on_upload(ev.client, std::move(*ev.update)); break;
      case EventKind::round_trigger: on_round_trigger(); break;
    }
  }

  // ---- client side --------------------------------------------------------

  void on_broadcast(std::size_t i, StampedModel model) {
    trace(TraceKind::broadcast_arrive, i, model.round);
    auto& c = clients_[i];
    c.state = deposit_receive(std::move(c.state), std::move(model));
    maybe_train(i);
  }

  void maybe_train(std::size_t i) {
    auto& c = clients_[i];
    if (c.busy || !c.state.receive_buffer) return;
    StampedModel base = *c.state.receive_buffer;
    if (sync_) c.state.receive_buffer.reset();
    if (base.round != c.rep_base) {
      c.rep_base = base.round;
      c.rep_next = 0;
    }
    const std::string label = training_stream_label(i, base.round, c.rep_next++);
    RngStream rng = derive_stream(cfg_.root_seed, label);
    c.in_flight = local_train(base, cfg_.policy.K, cfg_.policy.eta_bar, problem_, i, cfg_.batch, rng);
    c.state.training_base = base;
    c.busy = true;
    c.state.busy_until = now_ + train_time_[i];
    ++result_.counters.trainings;
    trace(TraceKind::training_start, i, base.round);
    push(c.state.busy_until, EventKind::training_done, i);
  }

  void start_upload(std::size_t i, LocalUpdate update) {
    trace(TraceKind::upload_start, i, update.base_round);
    ++result_.counters.uploads;
    push(now_ + up_, EventKind::upload_arrive, i, {}, std::move(update));
  }

  bool stale(const LocalUpdate& u) const { return sync_ && u.base_round < server_.round; }

  void on_training_done(std::size_t i) {
    auto& c = clients_[i];
    c.busy = false;
    c.state.training_base.reset();
    LocalUpdate update = std::move(*c.in_flight);
    c.in_flight.reset();
    trace(TraceKind::training_done, i, update.base_round);

    if (arrival_mode() || cfg_.policy.kind == AlgorithmKind::fedavg) {
      // Straight to the uplink; the send buffer is emptied by the upload.
      if (cfg_.policy.kind == AlgorithmKind::fedavg && !c.awaited) {
        ++result_.counters.discarded_stale_updates;
      } else {
        c.awaited = false;
        start_upload(i, std::move(update));
      }
    } else {
      if (sync_ && c.state.send_buffer && stale(*c.state.send_buffer)) {
        c.state.send_buffer.reset();
        ++result_.counters.discarded_stale_updates;
      }
      c.state = deposit_send(std::move(c.state), std::move(update), cfg_.policy.send_policy);
      if (c.awaited) try_collect(i);
    }
    maybe_train(i);
  }

  // nIID: upload the send buffer of an awaited client if it holds a usable update.
  void try_collect(std::size_t i) {
    auto& c = clients_[i];
    if (!c.state.send_buffer) return;
    if (stale(*c.state.send_buffer)) {
      c.state.send_buffer.reset();
      ++result_.counters.discarded_stale_updates;
      return;
    }
    LocalUpdate u = std::move(*c.state.send_buffer);
    c.state.send_buffer.reset();
    c.awaited = false;
    start_upload(i, std::move(u));
  }

  // ---- server side --------------------------------------------------------

  void on_upload(std::size_t i, LocalUpdate update) {
    trace(TraceKind::upload_arrive, i, update.base_round);
    if (arrival_mode()) {
      if (stale(update)) {
        ++result_.counters.discarded_stale_updates;
        return;
      }
      arrivals_.push_back(std::move(update));
      if (arrivals_.size() >= cfg_.policy.n && !trigger_pending_) {
        trigger_pending_ = true;
        push(now_, EventKind::round_trigger, 0);
      }
      return;
    }
    collected_[i] = std::move(update);
    if (--outstanding_ == 0) push(now_, EventKind::round_trigger, 0);
  }

  void on_round_trigger() {
    trigger_pending_ = false;
    const std::size_t t = server_.round;
    std::vector<LocalUpdate> taken;
    std::vector<const LocalUpdate*> updates;
    if (arrival_mode()) {
      for (std::size_t k = 0; k < cfg_.policy.n; ++k) {
        taken.push_back(std::move(arrivals_.front()));
        arrivals_.pop_front();
      }
      for (const auto& u : taken) updates.push_back(&u);
    } else {
      for (std::size_t c : sampled_) updates.push_back(&*collected_[c]);
    }
    server_ = server_round(cfg_.policy, std::move(server_), updates);
    for (const auto& p : server_.participation_log.back()) {
      const std::size_t delay = t - p.base_round;
      ++result_.staleness_histogram[delay];
      window_sum_ += static_cast<double>(delay);
      window_max_ = std::max(window_max_, delay);
      ++window_count_;
    }
    result_.round_end_times.push_back(now_);
    trace(TraceKind::round_complete, 0, server_.round);
    collected_.clear();

    const std::size_t r = server_.round;
    if (r % cfg_.eval_every == 0 || r == cfg_.T) record_row(now_);
    if (r >= cfg_.T) finished_ = true;
    if (finished_) return;

    begin_round(now_, cfg_.policy.kind != AlgorithmKind::fedavg);
    if (sync_ && arrival_mode()) {
      const auto before = arrivals_.size();
      std::erase_if(arrivals_, [&](const LocalUpdate& u) { return stale(u); });
      result_.counters.discarded_stale_updates += before - arrivals_.size();
    }
    if (arrival_mode() && arrivals_.size() >= cfg_.policy.n) {
      trigger_pending_ = true;
      push(now_, EventKind::round_trigger, 0);
    }
  }

  void begin_round(double now, bool broadcast_all) {
    const StampedModel model = make_stamped(server_.round, server_.weights);
    if (broadcast_all) {
      for (std::size_t i = 0; i < N_; ++i) push(now + down_, EventKind::broadcast_arrive, i, model);
    }
    if (arrival_mode()) return;

    RngStream rng = derive_stream(cfg_.root_seed, selection_stream_label(server_.round));
    auto spec = select_participants(cfg_.policy, N_, server_.round, rng);
    sampled_ = std::get<SampledSet>(spec).clients;
    std::vector<std::size_t> distinct = sampled_;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    outstanding_ = distinct.size();
    for (std::size_t c : distinct) {
      clients_[c].awaited = true;
      if (cfg_.policy.kind == AlgorithmKind::fedavg) {
        push(now + down_, EventKind::broadcast_arrive, c, model);
      } else {
        try_collect(c);
      }
    }
  }

  void record_row(double time) {
    MetricsRow row;
    row.round = server_.round;
    row.wall_clock = time;
    row.train_loss = problem_.loss(server_.weights);
    row.grad_norm_sq = problem_.gradient(server_.weights).norm_sq();
    row.test_accuracy = problem_.test_accuracy(server_.weights);
    if (window_count_ > 0) {
      row.mean_staleness = window_sum_ / static_cast<double>(window_count_);
      row.max_staleness = window_max_;
    }
    window_sum_ = 0.0;
    window_max_ = 0;
    window_count_ = 0;
    result_.rows.push_back(row);
    check_target(row);
  }

  void check_target(const MetricsRow& row) {
    if (result_.rounds_to_target) return;
    bool hit = false;
    if (cfg_.target_grad_norm_sq && row.grad_norm_sq <= *cfg_.target_grad_norm_sq) hit = true;
    if (cfg_.target_accuracy && row.test_accuracy && *row.test_accuracy >= *cfg_.target_accuracy) {
      hit = true;
    }
    if (!hit) return;
    result_.rounds_to_target = row.round;
    result_.time_to_target = row.wall_clock;
    if (cfg_.stop_at_target) {
      finished_ = true;
      result_.stopped_early = row.round < cfg_.T;
    }
  }

  const RunConfig& cfg_;
  const Problem& problem_;
  std::size_t N_ = 0;
  double down_ = 0.0;
  double up_ = 0.0;
  bool sync_ = false;
  std::vector<ClientRuntime> clients_;
  std::vector<double> train_time_;
  ServerState server_;
  std::vector<Event> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  bool finished_ = false;

  std::deque<LocalUpdate> arrivals_;
  bool trigger_pending_ = false;
  std::vector<std::size_t> sampled_;
  std::map<std::size_t, std::optional<LocalUpdate>> collected_;
  std::size_t outstanding_ = 0;

  double window_sum_ = 0.0;
  std::size_t window_max_ = 0;
  std::size_t window_count_ = 0;

  RunResult result_;
};

}  // namespace

RunResult run(const RunConfig& config) {
  validate_run_config(config);
  Engine engine(config);
  return engine.run();
}

StalenessReport staleness_report(const RunResult& result) {
  StalenessReport rep;
  rep.per_client_max.assign(result.num_clients, 0);
  double sum = 0.0;
  for (std::size_t t = 0; t < result.participation_log.size(); ++t) {
    for (const auto& p : result.participation_log[t]) {
      if (p.base_round > t) {
        rep.causal = false;
        continue;
      }
      const std::size_t delay = t - p.base_round;
      ++rep.histogram[delay];
      rep.max_staleness = std::max(rep.max_staleness, delay);
      if (p.client_id < rep.per_client_max.size()) {
        rep.per_client_max[p.client_id] = std::max(rep.per_client_max[p.client_id], delay);
      }
      sum += static_cast<double>(delay);
      ++rep.samples;
    }
  }
  if (rep.samples > 0) rep.mean_staleness = sum / static_cast<double>(rep.samples);
  return rep;
}

}  // namespace defedavg
