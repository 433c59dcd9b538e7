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

// lasp-sim: run one advertisement-counter experiment or a grid of them.
//
//   lasp-sim run --clients 32 --topology hyparview --mode delta --seed 1 --out results/
//   lasp-sim sweep --clients 32,64 --repeat 2 --jobs 4 --out results/
//
// Exit status: 0 when every run completes, 1 when a run times out, 2 for
// invalid flags.

#include <CLI11.hpp>

#include <iostream>
#include <thread>

#include "lasp/cli.hpp"

namespace {

using lasp::cli::ConfigError;
using lasp::sim::ExperimentConfig;

constexpr int kRunFailed = 1;
constexpr int kBadConfig = 2;

// Flag values kept as text so that `sweep` can accept comma lists for the
// grid axes while `run` insists on single values.
struct Flags {
  std::string clients = "32";
  std::string topology = "hyparview";
  std::string mode = "state";
  std::uint64_t impression_interval = 10;
  std::uint64_t propagation_interval = 5;
  std::uint64_t duration = 1800;
  std::size_t ads = 10;
  std::size_t contracts_per_ad = 1;
  std::uint64_t threshold = 500;
  std::optional<std::uint64_t> impressions_per_client;
  std::string latency = "1,1";
  double churn = 0.0;
  std::uint64_t seed = 1;
  std::string out = "results";
  bool overlay_dump = false;
  bool client_triggers = false;
  bool quiet = false;
};

void add_common(CLI::App& cmd, Flags& f) {
  cmd.add_option("--impression-interval", f.impression_interval, "Ticks between impressions")
      ->capture_default_str();
  cmd.add_option("--propagation-interval", f.propagation_interval,
                 "Ticks between propagation rounds")
      ->capture_default_str();
  cmd.add_option("--duration", f.duration, "Event-generation window in ticks")
      ->capture_default_str();
  cmd.add_option("--ads", f.ads, "Number of advertisements")->capture_default_str();
  cmd.add_option("--contracts-per-ad", f.contracts_per_ad, "Contracts per advertisement")
      ->capture_default_str();
  cmd.add_option("--threshold", f.threshold, "Impressions before an ad is retired")
      ->capture_default_str();
  cmd.add_option("--impressions-per-client", f.impressions_per_client,
                 "Impressions per client (default: duration / impression interval)");
  cmd.add_option("--latency", f.latency, "Link latency MIN,MAX in ticks")->capture_default_str();
  cmd.add_option("--churn", f.churn, "Kill+replace probability per client per minute")
      ->capture_default_str();
  cmd.add_option("--seed", f.seed, "Experiment seed")->capture_default_str();
  cmd.add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd.add_flag("--overlay-dump", f.overlay_dump, "Also write overlay.csv snapshots");
  cmd.add_flag("--client-triggers", f.client_triggers,
               "Let clients fire retirement triggers too");
  cmd.add_flag("-q,--quiet", f.quiet, "Print less");
}

ExperimentConfig base_config(const Flags& f) {
  ExperimentConfig c;
  c.impression_interval = f.impression_interval;
  c.propagation_interval = f.propagation_interval;
  c.duration = f.duration;
  c.ads = f.ads;
  c.contracts_per_ad = f.contracts_per_ad;
  c.threshold = f.threshold;
  c.impressions_per_client = f.impressions_per_client;
  std::tie(c.latency_min, c.latency_max) = lasp::cli::parse_latency(f.latency);
  c.churn = f.churn;
  c.seed = f.seed;
  c.client_triggers = f.client_triggers;
  return c;
}

int do_run(const Flags& f) {
  ExperimentConfig c = base_config(f);
  c.clients = lasp::cli::parse_u64(f.clients, "--clients");
  c.topology = lasp::sim::parse_topology(f.topology);
  c.mode = lasp::sim::parse_mode(f.mode);
  const auto result = lasp::cli::execute(c, f.out, f.overlay_dump);
  if (!f.quiet) std::cout << result.report.summary();
  std::cout << "wrote " << result.files.dir.string() << '\n';
  return result.report.completed ? 0 : kRunFailed;
}

int do_sweep(const Flags& f, std::size_t repeat, std::size_t jobs) {
  lasp::cli::SweepSpec spec;
  spec.base = base_config(f);
  spec.repeat = repeat;
  spec.clients.clear();
  for (const auto& s : lasp::cli::split_commas(f.clients)) {
    spec.clients.push_back(lasp::cli::parse_u64(s, "--clients"));
  }
  spec.topologies.clear();
  for (const auto& s : lasp::cli::split_commas(f.topology)) {
    spec.topologies.push_back(lasp::sim::parse_topology(s));
  }
  spec.modes.clear();
  for (const auto& s : lasp::cli::split_commas(f.mode)) {
    spec.modes.push_back(lasp::sim::parse_mode(s));
  }
  const auto configs = spec.expand();
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  if (!f.quiet) {
    std::cout << "sweep: " << configs.size() << " runs on " << jobs << " worker(s)\n";
  }
  const auto results = lasp::cli::run_all(
      configs, f.out, f.overlay_dump, jobs,
      [](const lasp::cli::RunResult& r) { std::cout << lasp::cli::brief(r) << std::endl; });
  const bool ok = std::all_of(results.begin(), results.end(),
                              [](const auto& r) { return r.report.completed; });
  return ok ? 0 : kRunFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic gossip simulator for the Lasp advertisement counter"};
  app.require_subcommand(1);

  Flags run_flags;
  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--clients", run_flags.clients, "Number of clients")->capture_default_str();
  run->add_option("--topology", run_flags.topology, "star | hyparview")->capture_default_str();
  run->add_option("--mode", run_flags.mode, "state | delta")->capture_default_str();
  add_common(*run, run_flags);

  Flags sweep_flags;
  sweep_flags.topology = "star,hyparview";
  sweep_flags.mode = "state,delta";
  std::size_t repeat = 2;
  std::size_t jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of experiments");
  sweep->add_option("--clients", sweep_flags.clients, "Comma list of client counts")
      ->capture_default_str();
  sweep->add_option("--topology", sweep_flags.topology, "Comma list of topologies")
      ->capture_default_str();
  sweep->add_option("--mode", sweep_flags.mode, "Comma list of modes")->capture_default_str();
  sweep->add_option("--repeat", repeat, "Runs per cell, with consecutive seeds")
      ->capture_default_str();
  sweep->add_option("--jobs", jobs, "Worker threads (0: one per core)")->capture_default_str();
  add_common(*sweep, sweep_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return do_run(run_flags);
    return do_sweep(sweep_flags, repeat, jobs);
  } catch (const ConfigError& e) {
    std::cerr << "lasp-sim: invalid configuration: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "lasp-sim: " << e.what() << '\n';
    return kRunFailed;
  }
}
