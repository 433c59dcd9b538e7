//  Copyright 2026 The lasp-sim Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#ifndef LASP_SIMULATOR_HPP_
#define LASP_SIMULATOR_HPP_

// Discrete-time driver for one advertisement-counter experiment. One tick is
// one simulated second. Each tick runs, in fixed node order: message
// delivery, workload and workflow marks, propagation (every propagation
// interval), membership shuffles, churn, then the omniscient observer that
// checks connectivity, convergence and the trace invariants.
//
// Phases are gated by a workflow CRDT replicated like any other variable:
//   task 0  event generation   marked by a client once its quota is done
//   task 1  convergence        marked once the local grand total is complete
//   task 2  log aggregation    marked as soon as it starts
//   task 3  shutdown           marked as soon as it starts
// The run ends when every live node sees all four tasks complete and the
// observer sees all replicas equal.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lasp/dataflow.hpp"
#include "lasp/dissemination.hpp"
#include "lasp/encoding.hpp"
#include "lasp/overlay/graph.hpp"
#include "lasp/overlay/hyparview.hpp"
#include "lasp/rng.hpp"
#include "lasp/scenario.hpp"
#include "lasp/workflow.hpp"

namespace lasp::sim {

using dissemination::Mode;
using dissemination::Payload;
using dissemination::PayloadKind;

enum class Topology { star, hyparview };

inline std::string_view to_string(Topology t) { return t == Topology::star ? "star" : "hyparview"; }

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline Topology parse_topology(std::string_view s) {
  if (s == "star") return Topology::star;
  if (s == "hyparview") return Topology::hyparview;
  throw ConfigError("unknown topology '" + std::string(s) + "' (expected star|hyparview)");
}

inline Mode parse_mode(std::string_view s) {
  if (s == "state") return Mode::state;
  if (s == "delta") return Mode::delta;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected state|delta)");
}

inline const dataflow::VariableId kWorkflow = "workflow";

struct ExperimentConfig {
  std::size_t clients = 32;
  Topology topology = Topology::hyparview;
  Mode mode = Mode::state;
  std::uint64_t impression_interval = 10;
  std::uint64_t propagation_interval = 5;
  std::uint64_t duration = 1800;
  std::size_t ads = 10;
  std::size_t contracts_per_ad = 1;
  std::uint64_t threshold = 500;
  std::optional<std::uint64_t> impressions_per_client;  // default: duration / interval
  std::uint64_t latency_min = 1;
  std::uint64_t latency_max = 1;
  double churn = 0.0;  // kill+replace probability per client per churn period
  std::uint64_t churn_period = 60;
  std::uint64_t seed = 1;
  bool client_triggers = false;
  std::uint32_t fallback_intervals = 3;
  double timeout_factor = 3.0;
  std::uint64_t bootstrap_stable_ticks = 10;
  std::uint64_t sample_interval = 60;
  overlay::HpvParams hpv;

  std::uint64_t quota() const {
    return impressions_per_client.value_or(duration / impression_interval);
  }
  std::uint64_t expected_events() const { return clients * quota(); }

  void validate() const {
    if (clients == 0) throw ConfigError("--clients must be at least 1");
    if (impression_interval == 0 || propagation_interval == 0 || duration == 0) {
      throw ConfigError("intervals and duration must be positive");
    }
    if (ads == 0) throw ConfigError("--ads must be at least 1");
    if (threshold == 0) throw ConfigError("--threshold must be at least 1");
    if (quota() == 0) throw ConfigError("--impressions-per-client must be at least 1");
    if (quota() * impression_interval > duration) {
      throw ConfigError("impressions-per-client x impression-interval exceeds duration");
    }
    if (latency_min == 0 || latency_max < latency_min) {
      throw ConfigError("--latency needs 1 <= MIN <= MAX");
    }
    if (!(churn >= 0.0 && churn <= 1.0)) throw ConfigError("--churn must be in [0, 1]");
    if (churn_period == 0 || sample_interval == 0 || bootstrap_stable_ticks == 0) {
      throw ConfigError("periods must be positive");
    }
    if (fallback_intervals == 0) throw ConfigError("fallback interval count must be positive");
    if (!(timeout_factor >= 1.0)) throw ConfigError("timeout factor must be >= 1");
    if (topology == Topology::star && mode == Mode::delta) {
      throw ConfigError(
          "delta dissemination is not evaluated on the star topology: the server "
          "would have to buffer every change for every client");
    }
    if (topology == Topology::star && churn > 0.0) {
      throw ConfigError("churn is only supported on the hyparview topology");
    }
    hpv.validate();
  }

  /// Canonical `key: value` lines; equal configs give equal text.
  std::string echo() const {
    std::ostringstream os;
    os << "clients: " << clients << '\n'
       << "topology: " << to_string(topology) << '\n'
       << "mode: " << dissemination::to_string(mode) << '\n'
       << "impression_interval: " << impression_interval << '\n'
       << "propagation_interval: " << propagation_interval << '\n'
       << "duration: " << duration << '\n'
       << "ads: " << ads << '\n'
       << "contracts_per_ad: " << contracts_per_ad << '\n'
       << "threshold: " << threshold << '\n'
       << "impressions_per_client: " << quota() << '\n'
       << "latency: " << latency_min << ',' << latency_max << '\n'
       << "churn: " << churn << '\n'
       << "churn_period: " << churn_period << '\n'
       << "client_triggers: " << (client_triggers ? "true" : "false") << '\n'
       << "seed: " << seed << '\n';
    return os.str();
  }

  std::string run_id() const { return codec::hex64(codec::fnv1a(echo())); }
};

/// Phase tag on metric records: 0 bootstrap, 1 + task index while a task is
/// current, 5 once the workflow is done.
inline constexpr std::uint32_t kPhaseDone = 5;

inline std::string_view phase_name(std::uint32_t phase) {
  static constexpr std::string_view kNames[] = {
      "bootstrap", "event_generation", "convergence", "log_aggregation", "shutdown", "done"};
  return phase <= kPhaseDone ? kNames[phase] : "?";
}

struct MetricsRecord {
  std::uint64_t tick;
  const ActorId* sender;
  const ActorId* receiver;
  PayloadKind kind;
  const std::string* variable;
  std::size_t bytes;
  bool instrumented;
  std::uint32_t phase;
};

/// Streams metric records as CSV and keeps a running FNV-1a checksum of the
/// exact bytes, so determinism can be checked without keeping the file.
class MetricsSink {
 public:
  static constexpr std::string_view kHeader =
      "tick,sender,receiver,payload_kind,variable_id,bytes,instrumented,phase\n";

  explicit MetricsSink(std::ostream* out = nullptr) : out_(out) { emit(kHeader); }

  void record(const MetricsRecord& r) {
    line_.clear();
    append_number(r.tick);
    line_ += ',';
    line_ += r.sender->str();
    line_ += ',';
    line_ += r.receiver->str();
    line_ += ',';
    line_ += dissemination::to_string(r.kind);
    line_ += ',';
    line_ += r.variable->empty() ? "-" : *r.variable;
    line_ += ',';
    append_number(r.bytes);
    line_ += r.instrumented ? ",1," : ",0,";
    append_number(r.phase);
    line_ += '\n';
    emit(line_);
    ++records_;
    if (r.instrumented) {
      instrumented_bytes_ += r.bytes;
      ++instrumented_payloads_;
    } else {
      control_bytes_ += r.bytes;
      ++control_payloads_;
    }
  }

  std::uint64_t checksum() const { return hash_; }
  std::uint64_t records() const { return records_; }
  std::uint64_t instrumented_bytes() const { return instrumented_bytes_; }
  std::uint64_t control_bytes() const { return control_bytes_; }
  std::uint64_t instrumented_payloads() const { return instrumented_payloads_; }
  std::uint64_t control_payloads() const { return control_payloads_; }

 private:
  void append_number(std::uint64_t v) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    line_.append(buf, res.ptr);
  }

  void emit(std::string_view s) {
    hash_ = codec::fnv1a(s, hash_);
    if (out_) out_->write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  std::ostream* out_;
  std::string line_;
  std::uint64_t hash_ = codec::kFnvOffset;
  std::uint64_t records_ = 0;
  std::uint64_t instrumented_bytes_ = 0;
  std::uint64_t control_bytes_ = 0;
  std::uint64_t instrumented_payloads_ = 0;
  std::uint64_t control_payloads_ = 0;
};

struct Retirement {
  std::uint64_t tick;
  std::string node;
  std::string ad;
  std::uint64_t local_count;
  std::uint64_t global_count;
  std::uint64_t threshold;
};

/// Invariant checks evaluated while the run executes. All counters are
/// violations except `max_buffered_deltas` and `fallbacks`.
struct TraceStats {
  std::uint64_t impressions_before_bootstrap = 0;
  std::uint64_t barrier_violations = 0;
  std::uint64_t phase_order_violations = 0;
  std::uint64_t retirement_violations = 0;
  std::uint64_t premature_retirements = 0;
  std::uint64_t reappearances = 0;
  std::uint64_t late_detections = 0;
  std::uint64_t max_buffered_deltas = 0;
  std::uint64_t fallbacks = 0;
  std::vector<Retirement> retirements;

  std::uint64_t violations() const {
    return impressions_before_bootstrap + barrier_violations + phase_order_violations +
           retirement_violations + premature_retirements + reappearances + late_detections;
  }
};

struct Report {
  ExperimentConfig config;
  std::string run_id;
  bool completed = false;
  std::string diagnostic;

  std::optional<std::uint64_t> bootstrap_tick;
  std::optional<std::uint64_t> first_event_tick;
  std::optional<std::uint64_t> final_event_tick;
  std::optional<std::uint64_t> convergence_tick;  // oracle
  std::optional<std::uint64_t> detection_tick;    // last in-band convergence mark
  std::array<std::optional<std::uint64_t>, workflow::kExperimentTasks> task_complete_tick{};
  std::uint64_t end_tick = 0;

  std::uint64_t instrumented_bytes = 0;
  std::uint64_t control_bytes = 0;
  std::uint64_t instrumented_payloads = 0;
  std::uint64_t control_payloads = 0;
  std::uint64_t csv_records = 0;
  std::uint64_t csv_checksum = 0;

  std::vector<std::pair<std::uint64_t, std::optional<std::size_t>>> diameter_samples;
  std::optional<std::size_t> diameter_at_final_event;

  std::map<std::string, std::uint64_t> final_counts;  // ad id -> count
  std::uint64_t spillover = 0;
  std::uint64_t final_total = 0;
  std::uint64_t impressions_generated = 0;
  std::uint64_t expected_impressions = 0;
  std::uint64_t kills = 0;
  TraceStats trace;

  bool converged() const { return completed && convergence_tick.has_value(); }
  bool conserved() const {
    return final_total == expected_impressions && impressions_generated == expected_impressions;
  }

  /// Convergence ticks after the final event, or nullopt.
  std::optional<std::uint64_t> convergence_latency() const {
    if (!convergence_tick || !final_event_tick) return std::nullopt;
    return *convergence_tick - *final_event_tick;
  }

  std::string summary() const {
    std::ostringstream os;
    auto opt = [&](const std::optional<std::uint64_t>& v) -> std::string {
      return v ? std::to_string(*v) : "-";
    };
    os << "run_id: " << run_id << '\n';
    std::istringstream cfg(config.echo());
    for (std::string line; std::getline(cfg, line);) os << "config." << line << '\n';
    os << "status: " << (completed ? "completed" : "failed") << '\n';
    if (!diagnostic.empty()) os << "diagnostic: " << diagnostic << '\n';
    os << "bootstrap_tick: " << opt(bootstrap_tick) << '\n'
       << "first_event_tick: " << opt(first_event_tick) << '\n'
       << "final_event_tick: " << opt(final_event_tick) << '\n'
       << "convergence_tick: " << opt(convergence_tick) << '\n'
       << "detection_tick: " << opt(detection_tick) << '\n';
    for (std::size_t k = 0; k < task_complete_tick.size(); ++k) {
      os << "task_complete_tick." << phase_name(static_cast<std::uint32_t>(k + 1)) << ": "
         << opt(task_complete_tick[k]) << '\n';
    }
    os << "end_tick: " << end_tick << '\n'
       << "total_instrumented_bytes: " << instrumented_bytes << '\n'
       << "total_control_bytes: " << control_bytes << '\n'
       << "instrumented_payloads: " << instrumented_payloads << '\n'
       << "control_payloads: " << control_payloads << '\n'
       << "diameter_samples:";
    for (const auto& [t, d] : diameter_samples) {
      os << ' ' << t << ':' << (d ? std::to_string(*d) : "disconnected");
    }
    os << '\n'
       << "diameter_at_final_event: "
       << (diameter_at_final_event ? std::to_string(*diameter_at_final_event) : "-") << '\n';
    for (const auto& [ad, n] : final_counts) os << "count." << ad << ": " << n << '\n';
    os << "count.spillover: " << spillover << '\n'
       << "final_total: " << final_total << '\n'
       << "impressions_generated: " << impressions_generated << '\n'
       << "expected_impressions: " << expected_impressions << '\n'
       << "retirements: " << trace.retirements.size() << '\n'
       << "kills: " << kills << '\n'
       << "trace.impressions_before_bootstrap: " << trace.impressions_before_bootstrap << '\n'
       << "trace.barrier_violations: " << trace.barrier_violations << '\n'
       << "trace.phase_order_violations: " << trace.phase_order_violations << '\n'
       << "trace.retirement_violations: " << trace.retirement_violations << '\n'
       << "trace.premature_retirements: " << trace.premature_retirements << '\n'
       << "trace.reappearances: " << trace.reappearances << '\n'
       << "trace.late_detections: " << trace.late_detections << '\n'
       << "trace.max_buffered_deltas: " << trace.max_buffered_deltas << '\n'
       << "trace.full_state_fallbacks: " << trace.fallbacks << '\n'
       << "csv_records: " << csv_records << '\n'
       << "csv_checksum: " << codec::hex64(csv_checksum) << '\n';
    return os.str();
  }
};

enum class Role { server, client };

struct SimNode {
  ActorId id;    // this incarnation: overlay address and CRDT actor
  ActorId slot;  // stable identity used for workflow flags
  Role role;
  dataflow::Store store;
  overlay::MembershipView view;
  dissemination::Disseminator diss;
  Rng rng;
  std::uint64_t offset = 0;
  std::uint64_t quota = 0;
  std::uint64_t done = 0;
  std::optional<std::uint64_t> joined_at;
  bool finished = false;

  // Observer bookkeeping. The caches hold the states they were computed
  // from, so a changed state can never reuse the old address.
  std::shared_ptr<const LatticeState> seen_displayable;
  std::set<std::string> showing;
  std::set<std::string> left;
  std::shared_ptr<const LatticeState> seen_workflow;
  std::uint32_t cached_phase = 1;

  SimNode(ActorId id_, ActorId slot_, Role role_, Mode mode, std::uint64_t seed,
          std::uint32_t fallback)
      : id(id_),
        slot(std::move(slot_)),
        role(role_),
        view(id_),
        diss(id_, mode, {kWorkflow}, fallback),
        rng(Rng::derive(seed, id_.str())) {}
};

/// The whole simulated system. Not copyable or movable: trigger callbacks
/// hold a pointer back into it.
class World {
 public:
  explicit World(ExperimentConfig cfg, std::ostream* csv = nullptr,
                 std::ostream* overlay_dump = nullptr)
      : cfg_(std::move(cfg)),
        metrics_(csv),
        overlay_dump_(overlay_dump),
        rng_(cfg_.seed) {
    cfg_.validate();
    ads_ = scenario::default_ads(cfg_.ads, cfg_.threshold);
    contracts_ = scenario::default_contracts(ads_, cfg_.contracts_per_ad);
    for (const auto& ad : ads_) global_counts_[ad.id] = 0;

    server_ = ActorId("server");
    slots_.push_back(server_);
    const int width = std::max(3, static_cast<int>(std::to_string(cfg_.clients - 1).size()));
    for (std::size_t i = 0; i < cfg_.clients; ++i) {
      std::string n = std::to_string(i);
      slots_.push_back(ActorId("c" + std::string(width - n.size(), '0') + n));
    }
    expected_ = std::set<ActorId>(slots_.begin(), slots_.end());

    for (std::size_t i = 0; i < slots_.size(); ++i) {
      nodes_.push_back(make_node(i, slots_[i], i == 0 ? 0 : cfg_.quota()));
    }
    if (overlay_dump_) *overlay_dump_ << "tick,node,active_peers\n";

    if (cfg_.topology == Topology::star) {
      std::set<ActorId> clients(slots_.begin() + 1, slots_.end());
      auto views = overlay::star_views(server_, clients);
      for (std::size_t i = 0; i < views.size(); ++i) {
        nodes_[i]->view = std::move(views[i]);
        nodes_[i]->joined_at = 0;
      }
    } else {
      nodes_[0]->joined_at = 0;
      for (std::size_t i = 1; i < nodes_.size(); ++i) join_order_.push_back(i);
      rng_.shuffle(join_order_);
    }
  }

  World(const World&) = delete;
  World& operator=(const World&) = delete;

  const ExperimentConfig& config() const { return cfg_; }
  std::uint64_t tick() const { return tick_; }
  bool done() const { return done_; }
  const std::vector<std::unique_ptr<SimNode>>& nodes() const { return nodes_; }
  const MetricsSink& metrics() const { return metrics_; }
  const TraceStats& trace() const { return trace_; }
  const std::set<ActorId>& expected() const { return expected_; }
  std::optional<std::uint64_t> bootstrap_tick() const { return bootstrap_tick_; }
  std::uint64_t impressions_generated() const { return impressions_; }

  std::vector<overlay::MembershipView> views() const {
    std::vector<overlay::MembershipView> out;
    for (const auto& n : nodes_) out.push_back(n->view);
    return out;
  }

  std::set<ActorId> live_ids() const {
    std::set<ActorId> out;
    for (const auto& n : nodes_) out.insert(n->id);
    return out;
  }

  /// Sends a payload now; it is delivered after the configured latency.
  void send(Payload p) {
    SimNode* from = find(p.sender);
    const std::uint32_t phase = from ? phase_of(*from) : 0;
    check_phase_order(phase);
    metrics_.record(MetricsRecord{tick_, &p.sender, &p.receiver, p.kind, &p.variable, p.bytes,
                                  p.instrumented, phase});
    const std::uint64_t at = tick_ + latency(p.sender, p.receiver);
    queue_.push(Queued{at, next_seq_++, std::move(p)});
  }

  /// True iff every instrumented variable is structurally equal on all live
  /// nodes.
  bool oracle_converged() const {
    const SimNode& ref = *nodes_.front();
    for (const auto& var : ref.store.sources()) {
      if (var == kWorkflow) continue;
      const LatticeState* want = ref.store.state_ptr(var).get();
      for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const auto& st = nodes_[i]->store;
        if (!st.contains(var)) return false;
        const LatticeState* got = st.state_ptr(var).get();
        if (got != want && !(*got == *want)) return false;
      }
    }
    return true;
  }

  /// Advances the world by one tick.
  void step() {
    if (done_) return;
    deliver();
    workload();
    if (bootstrap_tick_ && tick_ % cfg_.propagation_interval == 0) propagate();
    if (cfg_.topology == Topology::hyparview) {
      if (tick_ % cfg_.propagation_interval == 0) rejoin_isolated();
      if (tick_ % cfg_.hpv.shuffle_interval_ticks == 0) shuffle();
    }
    churn();
    observe();
    ++tick_;
  }

  Report run() {
    while (!done_) step();
    return report();
  }

  Report report() const {
    Report r;
    r.config = cfg_;
    r.run_id = cfg_.run_id();
    r.completed = completed_;
    r.diagnostic = diagnostic_;
    r.bootstrap_tick = bootstrap_tick_;
    r.first_event_tick = first_event_tick_;
    r.final_event_tick = last_event_tick_;
    r.convergence_tick = converged_since_;
    r.task_complete_tick = task_done_tick_;
    if (task_done_tick_[1]) r.detection_tick = task_done_tick_[1];
    r.end_tick = tick_ == 0 ? 0 : tick_ - 1;
    r.instrumented_bytes = metrics_.instrumented_bytes();
    r.control_bytes = metrics_.control_bytes();
    r.instrumented_payloads = metrics_.instrumented_payloads();
    r.control_payloads = metrics_.control_payloads();
    r.csv_records = metrics_.records();
    r.csv_checksum = metrics_.checksum();
    r.diameter_samples = diameter_samples_;
    r.diameter_at_final_event = diameter_at_final_;
    const auto& store = nodes_.front()->store;
    for (const auto& ad : ads_) {
      r.final_counts[ad.id] =
          store.state(scenario::counter_variable(ad.id)).as<GCounter>().value();
    }
    r.spillover = store.state(scenario::kSpillover).as<GCounter>().value();
    r.final_total = scenario::grand_total(store, ads_);
    r.impressions_generated = impressions_;
    r.expected_impressions = cfg_.expected_events();
    r.kills = kills_;
    r.trace = trace_;
    for (const auto& n : nodes_) r.trace.fallbacks += n->diss.fallbacks();
    r.trace.fallbacks += retired_fallbacks_;
    return r;
  }

 private:
  struct Queued {
    std::uint64_t at;
    std::uint64_t seq;
    Payload payload;
    bool operator>(const Queued& o) const {
      return at != o.at ? at > o.at : seq > o.seq;
    }
  };

  std::unique_ptr<SimNode> make_node(std::size_t index, const ActorId& id, std::uint64_t quota) {
    const ActorId slot = slots_[index];
    auto node = std::make_unique<SimNode>(id, slot, index == 0 ? Role::server : Role::client,
                                          cfg_.mode, cfg_.seed, cfg_.fallback_intervals);
    node->quota = quota;
    node->offset = node->rng.below(cfg_.impression_interval);
    auto& store = node->store;
    scenario::initialize(store, ads_, contracts_, server_);
    store.declare(kWorkflow, workflow::wcrdt_new(workflow::kExperimentTasks));
    if (node->role == Role::server || cfg_.client_triggers) {
      SimNode* raw = node.get();
      scenario::register_retirement_triggers(
          store, ads_, [this, raw](const scenario::Ad& ad, std::uint64_t local) {
            on_retire(*raw, ad, local);
          });
    }
    store.take_local_deltas();
    by_id_[id.str()] = index;
    return node;
  }

  SimNode* find(const ActorId& id) {
    auto it = by_id_.find(id.str());
    return it == by_id_.end() ? nullptr : nodes_[it->second].get();
  }

  std::uint64_t latency(const ActorId& from, const ActorId& to) {
    if (cfg_.latency_min == cfg_.latency_max) return cfg_.latency_min;
    auto key = std::make_pair(from.str(), to.str());
    auto it = link_rngs_.find(key);
    if (it == link_rngs_.end()) {
      it = link_rngs_
               .emplace(key, Rng(Rng::derive(cfg_.seed, from.str() + "->" + to.str())))
               .first;
    }
    return it->second.between(cfg_.latency_min, cfg_.latency_max);
  }

  std::uint32_t phase_of(SimNode& n) const {
    if (!bootstrap_tick_ || tick_ <= *bootstrap_tick_) return 0;
    auto w = n.store.state_ptr(kWorkflow);
    if (w != n.seen_workflow) {
      n.seen_workflow = w;
      auto ct = workflow::current_task(w->as<WCRDT>(), n.slot, expected_);
      n.cached_phase = ct ? static_cast<std::uint32_t>(ct->value + 1) : kPhaseDone;
    }
    return n.cached_phase;
  }

  void check_phase_order(std::uint32_t phase) {
    if (phase == 0) return;
    if (!bootstrap_tick_ || tick_ <= *bootstrap_tick_) {
      ++trace_.phase_order_violations;
      return;
    }
    // Phase p >= 2 means task p - 2 has been completed by every node.
    for (std::uint32_t k = 0; k + 2 <= phase && k < task_done_tick_.size(); ++k) {
      if (!task_done_tick_[k] || *task_done_tick_[k] > tick_) {
        ++trace_.phase_order_violations;
        return;
      }
    }
  }

  void absorb(SimNode& n) {
    n.diss.absorb_local(n.store);
    trace_.max_buffered_deltas =
        std::max<std::uint64_t>(trace_.max_buffered_deltas, n.diss.buffered_entries());
  }

  void send_all(const std::vector<overlay::Envelope>& out) {
    for (const auto& e : out) send(Payload::membership(e));
  }

  void deliver() {
    while (!queue_.empty() && queue_.top().at <= tick_) {
      Payload p = std::move(const_cast<Queued&>(queue_.top()).payload);
      queue_.pop();
      SimNode* dst = find(p.receiver);
      if (!dst) {
        // The receiver is gone. Its connection drop is noticed by the sender.
        if (SimNode* src = find(p.sender); src && cfg_.topology == Topology::hyparview) {
          auto r = overlay::hpv_on_unreachable(src->view, p.receiver, cfg_.hpv, src->rng);
          src->view = std::move(r.view);
          send_all(r.out);
        }
        continue;
      }
      switch (p.kind) {
        case PayloadKind::membership_control: {
          auto r = overlay::hpv_handle(dst->view, p.envelope(), cfg_.hpv, dst->rng);
          dst->view = std::move(r.view);
          send_all(r.out);
          break;
        }
        case PayloadKind::full_state:
        case PayloadKind::delta_group:
          if (auto ack = dst->diss.receive(dst->store, p)) send(std::move(*ack));
          trace_.max_buffered_deltas =
              std::max<std::uint64_t>(trace_.max_buffered_deltas, dst->diss.buffered_entries());
          break;
        case PayloadKind::ack:
          dst->diss.receive_ack(p);
          break;
      }
    }
  }

  void mark(SimNode& n, std::size_t task) {
    const auto& w = n.store.state(kWorkflow).as<WCRDT>();
    if (task > 0 && !workflow::is_task_complete(w, workflow::TaskIndex{task - 1}, expected_)) {
      ++trace_.barrier_violations;
    }
    if (w.task(task).flag(n.slot)) return;
    n.store.update(kWorkflow, workflow::mark(workflow::TaskIndex{task}, n.slot));
    absorb(n);
    mark_tick_[task].try_emplace(n.slot, tick_);
    auto& marks = marked_[task];
    if (marks.insert(n.slot).second && marks.size() == expected_.size()) {
      task_done_tick_[task] = tick_;
    }
  }

  void workload() {
    if (cfg_.topology == Topology::hyparview && !bootstrap_tick_ &&
        next_join_ < join_order_.size()) {
      SimNode& n = *nodes_[join_order_[next_join_++]];
      n.joined_at = tick_;
      send(Payload::membership({n.id, server_, overlay::Join{}}));
    }
    if (!bootstrap_tick_) return;
    const std::uint64_t start = *bootstrap_tick_ + 1;

    for (auto& np : nodes_) {
      SimNode& n = *np;
      const auto ct = workflow::current_task(n.store.state(kWorkflow).as<WCRDT>(), n.slot,
                                             expected_);
      if (!ct || ct->value >= 1) task0_visible_.try_emplace(n.slot, tick_);
      if (!ct) {
        n.finished = true;
        continue;
      }
      switch (ct->value) {
        case 0:
          if (n.role == Role::client && n.done < n.quota &&
              (tick_ - start) % cfg_.impression_interval == n.offset && !n.view.isolated()) {
            impression(n);
          }
          if (n.role == Role::server || n.done >= n.quota) mark(n, 0);
          break;
        case 1:
          if (scenario::grand_total(n.store, ads_) == cfg_.expected_events()) mark(n, 1);
          break;
        default:
          // Log aggregation and shutdown have no simulated work: the records
          // are already streamed, so the node marks as soon as the task starts.
          mark(n, ct->value);
          break;
      }
    }
  }

  void impression(SimNode& n) {
    if (!bootstrap_tick_ || tick_ <= *bootstrap_tick_) ++trace_.impressions_before_bootstrap;
    in_impression_ = true;
    const auto var = scenario::client_impression(n.store, n.id, n.rng);
    in_impression_ = false;
    absorb(n);
    ++n.done;
    ++impressions_;
    if (var != scenario::kSpillover) {
      const std::string ad = var.substr(std::string("counter:").size());
      ++global_counts_[ad];
      // A trigger fired by this very increment saw the tally one short.
      for (std::size_t i : unchecked_) {
        if (trace_.retirements[i].ad == ad) ++trace_.retirements[i].global_count;
      }
    }
    for (std::size_t i : unchecked_) check_retirement(trace_.retirements[i]);
    unchecked_.clear();
    if (!first_event_tick_) first_event_tick_ = tick_;
    last_event_tick_ = tick_;
    if (impressions_ == cfg_.expected_events()) diameter_at_final_ = sample_diameter();
  }

  void on_retire(SimNode& n, const scenario::Ad& ad, std::uint64_t local) {
    trace_.retirements.push_back(Retirement{tick_, n.id.str(), ad.id, local,
                                            global_counts_.at(ad.id), ad.threshold});
    if (in_impression_) {
      unchecked_.push_back(trace_.retirements.size() - 1);
    } else {
      check_retirement(trace_.retirements.back());
    }
    first_retire_tick_.try_emplace(ad.id, tick_);
    // Removing an ad is an update to a replicated variable.
    last_event_tick_ = tick_;
  }

  void check_retirement(const Retirement& r) {
    if (r.local_count < r.threshold || r.global_count < r.threshold) {
      ++trace_.retirement_violations;
    }
  }

  void propagate() {
    for (auto& np : nodes_) {
      SimNode& n = *np;
      for (auto& p : n.diss.propagate(n.store, n.view.active)) send(std::move(p));
      trace_.max_buffered_deltas =
          std::max<std::uint64_t>(trace_.max_buffered_deltas, n.diss.buffered_entries());
    }
  }

  void rejoin_isolated() {
    std::set<ActorId> directory;
    for (const auto& n : nodes_) {
      if (n->joined_at) directory.insert(n->id);
    }
    if (directory.size() < 2) return;
    for (auto& np : nodes_) {
      SimNode& n = *np;
      // Give an outstanding join time to complete before retrying.
      if (!n.joined_at || *n.joined_at + 2 * cfg_.latency_max + 1 > tick_) continue;
      send_all(overlay::rejoin_if_isolated(n.view, directory, n.rng));
    }
  }

  void shuffle() {
    for (auto& np : nodes_) {
      SimNode& n = *np;
      if (!n.joined_at) continue;
      auto r = overlay::hpv_shuffle(n.view, cfg_.hpv, n.rng);
      n.view = std::move(r.view);
      send_all(r.out);
    }
  }

  void churn() {
    if (cfg_.churn <= 0.0 || !bootstrap_tick_ || tick_ <= *bootstrap_tick_) return;
    if (tick_ % cfg_.churn_period != 0 || task_done_tick_[0]) return;
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      if (rng_.chance(cfg_.churn)) replace(i);
    }
  }

  void replace(std::size_t index) {
    SimNode& old = *nodes_[index];
    const ActorId dead = old.id;
    const std::uint64_t remaining = old.quota - old.done;
    retired_fallbacks_ += old.diss.fallbacks();
    by_id_.erase(dead.str());
    const std::uint32_t incarnation = ++incarnations_[index];
    ++kills_;
    nodes_[index] = make_node(
        index, ActorId(slots_[index].str() + "#" + std::to_string(incarnation)), remaining);
    SimNode& fresh = *nodes_[index];
    fresh.joined_at = tick_;

    // Survivors holding a connection to the dead node notice the drop.
    for (auto& np : nodes_) {
      SimNode& n = *np;
      if (!n.view.is_active(dead)) {
        n.view.passive.erase(dead);
        continue;
      }
      auto r = overlay::hpv_on_failure(n.view, dead, cfg_.hpv, n.rng);
      n.view = std::move(r.view);
      send_all(r.out);
    }
    send_all(overlay::rejoin_if_isolated(fresh.view, live_ids(), fresh.rng));
  }

  std::optional<std::size_t> sample_diameter() const {
    try {
      return overlay::diameter(overlay::OverlayGraph::from_views(views()));
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  }

  void observe_displayable() {
    for (auto& np : nodes_) {
      SimNode& n = *np;
      auto d = n.store.state_ptr(scenario::kDisplayable);
      if (d == n.seen_displayable) continue;
      n.seen_displayable = d;
      std::set<std::string> now;
      for (const auto& e : d->as<AWSet>().elements()) now.insert(e.as_string());
      for (const auto& ad : n.showing) {
        if (now.contains(ad)) continue;
        if (!first_retire_tick_.contains(ad)) ++trace_.premature_retirements;
        n.left.insert(ad);
      }
      for (const auto& ad : now) {
        if (n.left.contains(ad)) ++trace_.reappearances;
      }
      n.showing = std::move(now);
    }
  }

  void fail(std::string why) {
    completed_ = false;
    diagnostic_ = std::move(why);
    done_ = true;
  }

  std::string unmarked(std::size_t task) const {
    std::string out;
    for (const auto& s : expected_) {
      if (marked_[task].contains(s)) continue;
      if (!out.empty()) out += ' ';
      out += s.str();
    }
    return out;
  }

  void observe() {
    if (!bootstrap_tick_) {
      const bool all_joined = std::all_of(nodes_.begin(), nodes_.end(),
                                          [](const auto& n) { return n->joined_at.has_value(); });
      const bool one = all_joined && overlay::is_single_component(views(), live_ids());
      stable_ = one ? stable_ + 1 : 0;
      if (stable_ >= cfg_.bootstrap_stable_ticks) {
        bootstrap_tick_ = tick_;
        diameter_samples_.emplace_back(tick_, sample_diameter());
        dump_overlay();
      } else if (tick_ >= static_cast<std::uint64_t>(cfg_.timeout_factor *
                                                     static_cast<double>(cfg_.duration))) {
        fail("phase bootstrap timed out at tick " + std::to_string(tick_) +
             ": overlay is not a single component");
      }
      return;
    }

    if (tick_ > *bootstrap_tick_ && (tick_ - *bootstrap_tick_) % cfg_.sample_interval == 0) {
      diameter_samples_.emplace_back(tick_, sample_diameter());
      dump_overlay();
    }
    observe_displayable();

    if (impressions_ == cfg_.expected_events()) {
      if (oracle_converged()) {
        if (!converged_since_) converged_since_ = tick_;
      } else {
        converged_since_.reset();
      }
    }

    const bool all_finished = std::all_of(nodes_.begin(), nodes_.end(),
                                          [](const auto& n) { return n->finished; });
    if (all_finished && converged_since_) {
      completed_ = true;
      done_ = true;
      check_detection();
      return;
    }

    // Each phase gets timeout_factor x duration after the previous one.
    std::uint64_t phase_start = *bootstrap_tick_;
    std::size_t phase = 0;
    while (phase < task_done_tick_.size() && task_done_tick_[phase]) {
      phase_start = *task_done_tick_[phase];
      ++phase;
    }
    const auto budget = static_cast<std::uint64_t>(cfg_.timeout_factor *
                                                   static_cast<double>(cfg_.duration));
    if (tick_ > phase_start + budget) {
      if (phase < task_done_tick_.size()) {
        fail("phase " + std::string(phase_name(static_cast<std::uint32_t>(phase + 1))) +
             " timed out at tick " + std::to_string(tick_) + "; unmarked: " + unmarked(phase));
      } else {
        fail("run did not settle by tick " + std::to_string(tick_) +
             (converged_since_ ? "" : ": replicas still differ"));
      }
    }
  }

  // In-band detection must follow the oracle closely: a node marks the
  // convergence task no later than one propagation interval after both its
  // counters are complete (bounded by the oracle tick) and the previous
  // barrier is visible to it (bounded by the barrier's completion plus the
  // time to spread it, which the node itself reports by marking).
  void check_detection() {
    if (!converged_since_ || !task_done_tick_[0]) return;
    for (const auto& [slot, t] : mark_tick_[1]) {
      const std::uint64_t visible = task0_visible_.contains(slot) ? task0_visible_.at(slot) : t;
      if (t > std::max(*converged_since_, visible) + cfg_.propagation_interval) {
        ++trace_.late_detections;
      }
    }
  }

  void dump_overlay() {
    if (!overlay_dump_) return;
    for (const auto& n : nodes_) {
      *overlay_dump_ << tick_ << ',' << n->id << ',';
      bool first = true;
      for (const auto& p : n->view.active) {
        if (!first) *overlay_dump_ << ';';
        *overlay_dump_ << p;
        first = false;
      }
      *overlay_dump_ << '\n';
    }
  }

  ExperimentConfig cfg_;
  MetricsSink metrics_;
  std::ostream* overlay_dump_;
  Rng rng_;
  std::vector<scenario::Ad> ads_;
  std::vector<scenario::Contract> contracts_;
  ActorId server_;
  std::vector<ActorId> slots_;
  std::set<ActorId> expected_;
  std::vector<std::unique_ptr<SimNode>> nodes_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::size_t, std::uint32_t> incarnations_;
  std::map<std::pair<std::string, std::string>, Rng> link_rngs_;
  std::priority_queue<Queued, std::vector<Queued>, std::greater<>> queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t tick_ = 0;
  bool done_ = false;
  bool completed_ = false;
  std::string diagnostic_;

  std::vector<std::size_t> join_order_;
  std::size_t next_join_ = 0;
  std::uint64_t stable_ = 0;
  std::optional<std::uint64_t> bootstrap_tick_;

  std::uint64_t impressions_ = 0;
  bool in_impression_ = false;
  std::vector<std::size_t> unchecked_;
  std::map<std::string, std::uint64_t> global_counts_;
  std::optional<std::uint64_t> first_event_tick_;
  std::optional<std::uint64_t> last_event_tick_;
  std::optional<std::uint64_t> converged_since_;
  std::array<std::set<ActorId>, workflow::kExperimentTasks> marked_;
  std::array<std::optional<std::uint64_t>, workflow::kExperimentTasks> task_done_tick_{};
  std::array<std::map<ActorId, std::uint64_t>, workflow::kExperimentTasks> mark_tick_;
  std::map<ActorId, std::uint64_t> task0_visible_;
  std::map<std::string, std::uint64_t> first_retire_tick_;
  std::vector<std::pair<std::uint64_t, std::optional<std::size_t>>> diameter_samples_;
  std::optional<std::size_t> diameter_at_final_;
  std::uint64_t kills_ = 0;
  std::uint64_t retired_fallbacks_ = 0;
  TraceStats trace_;
};

/// Runs one experiment to completion or timeout.
inline Report run_experiment(const ExperimentConfig& cfg, std::ostream* csv = nullptr,
                             std::ostream* overlay_dump = nullptr) {
  World world(cfg, csv, overlay_dump);
  return world.run();
}

}  // namespace lasp::sim

#endif  // LASP_SIMULATOR_HPP_
