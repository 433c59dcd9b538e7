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

#ifndef LASP_CLI_HPP_
#define LASP_CLI_HPP_

// Everything the lasp-sim front end does besides flag parsing: turning flag
// text into configs, expanding sweeps, running experiments on worker threads
// and writing the per-run output directory.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lasp/simulator.hpp"

namespace lasp::cli {

namespace fs = std::filesystem;
using sim::ConfigError;
using sim::ExperimentConfig;
using sim::Report;

inline std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.emplace_back(text.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (const auto& s : out) {
    if (s.empty()) throw ConfigError("empty item in list '" + std::string(text) + "'");
  }
  return out;
}

inline std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(std::string(what) + ": '" + std::string(s) + "' is not an unsigned integer");
  }
  return v;
}

/// `MIN,MAX` or a single value used for both bounds.
inline std::pair<std::uint64_t, std::uint64_t> parse_latency(std::string_view s) {
  const auto parts = split_commas(s);
  if (parts.size() > 2) throw ConfigError("--latency expects MIN,MAX");
  const auto lo = parse_u64(parts[0], "--latency");
  const auto hi = parts.size() == 2 ? parse_u64(parts[1], "--latency") : lo;
  return {lo, hi};
}

/// Output layout of one run.
struct RunFiles {
  fs::path dir;
  fs::path metrics;
  fs::path summary;
  fs::path overlay;  // empty unless requested
};

inline RunFiles layout(const fs::path& out, const ExperimentConfig& cfg, bool overlay_dump) {
  RunFiles f;
  f.dir = out / cfg.run_id();
  f.metrics = f.dir / "metrics.csv";
  f.summary = f.dir / "summary.txt";
  if (overlay_dump) f.overlay = f.dir / "overlay.csv";
  return f;
}

struct RunResult {
  Report report;
  RunFiles files;
};

/// Runs one validated experiment and writes its directory under `out`.
inline RunResult execute(const ExperimentConfig& cfg, const fs::path& out, bool overlay_dump) {
  cfg.validate();
  RunResult result;
  result.files = layout(out, cfg, overlay_dump);
  fs::create_directories(result.files.dir);

  std::ofstream csv(result.files.metrics, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + result.files.metrics.string());
  std::ofstream overlay;
  if (overlay_dump) {
    overlay.open(result.files.overlay, std::ios::binary);
    if (!overlay) throw std::runtime_error("cannot write " + result.files.overlay.string());
  }
  result.report = sim::run_experiment(cfg, &csv, overlay_dump ? &overlay : nullptr);
  csv.close();
  if (!csv) throw std::runtime_error("write failed: " + result.files.metrics.string());

  std::ofstream summary(result.files.summary, std::ios::binary);
  summary << result.report.summary();
  if (!summary) throw std::runtime_error("cannot write " + result.files.summary.string());
  return result;
}

/// Grid of experiments sharing timing parameters. Each cell runs `repeat`
/// times with seeds base, base + 1, ...
struct SweepSpec {
  ExperimentConfig base;
  std::vector<std::size_t> clients{32};
  std::vector<sim::Topology> topologies{sim::Topology::star, sim::Topology::hyparview};
  std::vector<sim::Mode> modes{sim::Mode::state, sim::Mode::delta};
  std::size_t repeat = 2;

  /// Valid cells in (clients, topology, mode, repetition) order. Cells that
  /// the config rules exclude by design (delta or churn on the star) are
  /// skipped; any other invalid setting is an error.
  std::vector<ExperimentConfig> expand() const {
    if (repeat == 0) throw ConfigError("--repeat must be at least 1");
    if (clients.empty() || topologies.empty() || modes.empty()) {
      throw ConfigError("sweep lists must not be empty");
    }
    std::vector<ExperimentConfig> out;
    for (auto n : clients) {
      for (auto topo : topologies) {
        for (auto mode : modes) {
          if (topo == sim::Topology::star && (mode == sim::Mode::delta || base.churn > 0)) {
            continue;
          }
          for (std::size_t r = 0; r < repeat; ++r) {
            ExperimentConfig c = base;
            c.clients = n;
            c.topology = topo;
            c.mode = mode;
            c.seed = base.seed + r;
            c.validate();
            out.push_back(c);
          }
        }
      }
    }
    return out;
  }
};

/// Runs every config on `jobs` worker threads. Results come back in input
/// order; `on_done` is called under a lock as each run finishes.
inline std::vector<RunResult> run_all(const std::vector<ExperimentConfig>& configs,
                                      const fs::path& out, bool overlay_dump, std::size_t jobs,
                                      const std::function<void(const RunResult&)>& on_done = {}) {
  std::vector<RunResult> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      try {
        results[i] = execute(configs[i], out, overlay_dump);
        if (on_done) {
          std::lock_guard lock(mu);
          on_done(results[i]);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(configs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

/// One line per finished run, for sweep progress output.
inline std::string brief(const RunResult& r) {
  const auto& c = r.report.config;
  std::ostringstream os;
  os << r.report.run_id << ' ' << (r.report.completed ? "completed" : "FAILED") << " clients="
     << c.clients << " topology=" << sim::to_string(c.topology)
     << " mode=" << dissemination::to_string(c.mode) << " seed=" << c.seed
     << " instrumented_bytes=" << r.report.instrumented_bytes;
  if (r.report.convergence_latency()) os << " convergence_ticks=" << *r.report.convergence_latency();
  if (!r.report.completed) os << " (" << r.report.diagnostic << ')';
  return os.str();
}

}  // namespace lasp::cli

#endif  // LASP_CLI_HPP_
