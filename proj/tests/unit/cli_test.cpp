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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lasp/cli.hpp"

namespace lasp::cli {
namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("lasp-cli-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.clients = 6;
  c.duration = 120;
  c.ads = 3;
  c.threshold = 20;
  return c;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(LASP_SIM_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(ParseTest, CommaLists) {
  EXPECT_EQ(split_commas("32,64"), (std::vector<std::string>{"32", "64"}));
  EXPECT_EQ(split_commas("star"), (std::vector<std::string>{"star"}));
  EXPECT_THROW(split_commas("32,,64"), ConfigError);
  EXPECT_THROW(split_commas(""), ConfigError);
}

TEST(ParseTest, Numbers) {
  EXPECT_EQ(parse_u64("128", "x"), 128u);
  EXPECT_THROW(parse_u64("12a", "x"), ConfigError);
  EXPECT_THROW(parse_u64("-1", "x"), ConfigError);
  EXPECT_EQ(parse_latency("1,3"), std::make_pair(std::uint64_t{1}, std::uint64_t{3}));
  EXPECT_EQ(parse_latency("2"), std::make_pair(std::uint64_t{2}, std::uint64_t{2}));
  EXPECT_THROW(parse_latency("1,2,3"), ConfigError);
}

TEST(SweepTest, GridSkipsExcludedCells) {
  SweepSpec spec;
  spec.base = tiny();
  spec.clients = {32, 64};
  const auto cells = spec.expand();
  // 2 sizes x (star/state, hyparview/state, hyparview/delta) x 2 repeats.
  ASSERT_EQ(cells.size(), 12u);
  std::set<std::string> ids;
  for (const auto& c : cells) {
    EXPECT_FALSE(c.topology == sim::Topology::star && c.mode == sim::Mode::delta);
    ids.insert(c.run_id());
  }
  EXPECT_EQ(ids.size(), cells.size());
  EXPECT_EQ(cells[0].seed, 1u);
  EXPECT_EQ(cells[1].seed, 2u);
}

TEST(SweepTest, ChurnDropsStarCells) {
  SweepSpec spec;
  spec.base = tiny();
  spec.base.churn = 0.05;
  spec.repeat = 1;
  for (const auto& c : spec.expand()) EXPECT_EQ(c.topology, sim::Topology::hyparview);
}

TEST(SweepTest, InvalidSharedSettingsAreErrors) {
  SweepSpec spec;
  spec.base = tiny();
  spec.base.impression_interval = 0;
  EXPECT_THROW(spec.expand(), ConfigError);
  spec = SweepSpec{};
  spec.repeat = 0;
  EXPECT_THROW(spec.expand(), ConfigError);
}

TEST(ExecuteTest, WritesBothFilesAndReproduces) {
  TempDir tmp;
  auto c = tiny();
  c.mode = sim::Mode::delta;
  const auto a = execute(c, tmp.path(), false);
  EXPECT_TRUE(a.report.completed) << a.report.diagnostic;
  EXPECT_EQ(a.files.dir.filename(), c.run_id());
  ASSERT_TRUE(fs::exists(a.files.metrics));
  ASSERT_TRUE(fs::exists(a.files.summary));
  EXPECT_FALSE(fs::exists(a.files.dir / "overlay.csv"));
  const auto csv = slurp(a.files.metrics);
  EXPECT_EQ(codec::fnv1a(csv), a.report.csv_checksum);
  EXPECT_EQ(slurp(a.files.summary), a.report.summary());

  const auto b = execute(c, tmp.path(), true);
  EXPECT_EQ(slurp(b.files.metrics), csv);
  EXPECT_TRUE(fs::exists(b.files.overlay));
}

TEST(ExecuteTest, ParallelRunnerKeepsOrder) {
  TempDir tmp;
  SweepSpec spec;
  spec.base = tiny();
  spec.clients = {4, 6};
  const auto cells = spec.expand();
  std::size_t seen = 0;
  const auto results = run_all(cells, tmp.path(), false, 3, [&](const RunResult&) { ++seen; });
  ASSERT_EQ(results.size(), cells.size());
  EXPECT_EQ(seen, cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    EXPECT_EQ(results[i].report.run_id, cells[i].run_id());
    EXPECT_TRUE(results[i].report.completed);
    // Same result as a sequential run.
    EXPECT_EQ(results[i].report.csv_checksum, sim::run_experiment(cells[i]).csv_checksum) << i;
  }
}

TEST(BinaryTest, RejectsStarDelta) {
  TempDir tmp;
  EXPECT_EQ(run_binary("run --clients 32 --topology star --mode delta --out " +
                       tmp.path().string()),
            2);
  EXPECT_TRUE(fs::is_empty(tmp.path()));
}

TEST(BinaryTest, RejectsBadFlags) {
  EXPECT_NE(run_binary("run --clients many"), 0);
  EXPECT_NE(run_binary("run --topology ring"), 0);
  EXPECT_NE(run_binary("frobnicate"), 0);
  EXPECT_EQ(run_binary("--help"), 0);
}

TEST(BinaryTest, RunWritesOutputs) {
  TempDir tmp;
  auto c = tiny();
  c.mode = sim::Mode::delta;
  c.seed = 3;
  EXPECT_EQ(run_binary("run --clients 6 --duration 120 --ads 3 --threshold 20 --mode delta "
                       "--seed 3 -q --overlay-dump --out " +
                       tmp.path().string()),
            0);
  const auto dir = tmp.path() / c.run_id();
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.txt"));
  EXPECT_TRUE(fs::exists(dir / "overlay.csv"));
  EXPECT_EQ(codec::fnv1a(slurp(dir / "metrics.csv")), sim::run_experiment(c).csv_checksum);
}

TEST(BinaryTest, SweepWritesOneDirectoryPerRun) {
  TempDir tmp;
  EXPECT_EQ(run_binary("sweep --clients 4,6 --duration 100 --ads 2 --threshold 10 --jobs 2 -q "
                       "--out " +
                       tmp.path().string()),
            0);
  std::size_t dirs = 0;
  for (const auto& e : fs::directory_iterator(tmp.path())) {
    ++dirs;
    EXPECT_TRUE(fs::exists(e.path() / "metrics.csv"));
    EXPECT_TRUE(fs::exists(e.path() / "summary.txt"));
  }
  EXPECT_EQ(dirs, 12u);
}

}  // namespace
}  // namespace lasp::cli
