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

#include <cmath>
#include <map>

#include "lasp/scenario.hpp"

namespace lasp::scenario {
namespace {

const ActorId kServer("s0");
const ActorId kClient("c001");

Store fresh(const std::vector<Ad>& ads, const std::vector<Contract>& contracts) {
  Store s;
  initialize(s, ads, contracts, kServer);
  return s;
}

std::uint64_t count(const Store& s, const std::string& ad) {
  return s.state(counter_variable(ad)).as<GCounter>().value();
}

TEST(ScenarioTest, DefaultNames) {
  auto ads = default_ads(3, 7);
  ASSERT_EQ(ads.size(), 3u);
  EXPECT_EQ(ads[0].id, "ad00");
  EXPECT_EQ(ads[2].id, "ad02");
  EXPECT_EQ(ads[1].threshold, 7u);
  EXPECT_EQ(counter_variable("ad01"), "counter:ad01");
  EXPECT_EQ(default_contracts(ads, 2).size(), 6u);
}

TEST(ScenarioTest, TwoContractedAdsAreDisplayable) {
  auto ads = default_ads(2, 10);
  auto s = fresh(ads, default_contracts(ads, 1));
  EXPECT_EQ(displayable(s), (std::vector<std::string>{"ad00", "ad01"}));
  EXPECT_TRUE(s.take_local_deltas().empty());
}

TEST(ScenarioTest, AdWithoutContractExcluded) {
  auto ads = default_ads(3, 10);
  auto s = fresh(ads, {{"k", "ad01"}, {"orphan", "ad99"}});
  EXPECT_EQ(displayable(s), (std::vector<std::string>{"ad01"}));
}

TEST(ScenarioTest, DuplicateAdRejected) {
  Store s;
  EXPECT_THROW(initialize(s, {{"a", 1}, {"a", 2}}, {}, kServer), std::invalid_argument);
  Store z;
  EXPECT_THROW(initialize(z, {{"a", 0}}, {}, kServer), std::invalid_argument);
}

TEST(ScenarioTest, DisplayableMatchesRelationalJoin) {
  Rng rng(51);
  for (int run = 0; run < 200; ++run) {
    std::vector<Ad> ads;
    for (std::size_t i = 0; i < 6; ++i) {
      if (rng.chance(0.6)) ads.push_back(Ad{"ad" + std::to_string(i), 5});
    }
    std::vector<Contract> contracts;
    for (auto n = rng.below(8); n > 0; --n) {
      contracts.push_back(
          Contract{"k" + std::to_string(rng.below(3)), "ad" + std::to_string(rng.below(8))});
    }
    std::set<std::string> oracle;
    for (const auto& a : ads) {
      for (const auto& c : contracts) {
        if (c.ad_id == a.id) oracle.insert(a.id);
      }
    }
    auto s = fresh(ads, contracts);
    const auto got = displayable(s);
    ASSERT_EQ(std::set<std::string>(got.begin(), got.end()), oracle);
  }
}

TEST(ScenarioTest, SingletonDisplayableIsChosen) {
  auto s = fresh({{"only", 100}}, {{"k", "only"}});
  Rng rng(1);
  EXPECT_EQ(client_impression(s, kClient, rng), "counter:only");
  EXPECT_EQ(count(s, "only"), 1u);
}

TEST(ScenarioTest, EmptyDisplayableHitsSpillover) {
  auto s = fresh({{"ad", 100}}, {});
  Rng rng(2);
  EXPECT_EQ(client_impression(s, kClient, rng), kSpillover);
  EXPECT_EQ(s.state(kSpillover).as<GCounter>().value(), 1u);
  EXPECT_EQ(grand_total(s, {{"ad", 100}}), 1u);
}

TEST(ScenarioTest, ImpressionsAreUniform) {
  // 10^4 impressions over 10 ads: each share within 5 sigma of n/10.
  auto ads = default_ads(10, 1'000'000);
  auto s = fresh(ads, default_contracts(ads, 1));
  Rng rng(3);
  const int n = 10'000;
  for (int i = 0; i < n; ++i) client_impression(s, kClient, rng);
  const double p = 0.1;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (const auto& ad : ads) {
    EXPECT_NEAR(static_cast<double>(count(s, ad.id)), n * p, 5 * sigma) << ad.id;
  }
  EXPECT_EQ(grand_total(s, ads), static_cast<std::uint64_t>(n));
}

TEST(ScenarioTest, TriggerRetiresAtThreshold) {
  auto ads = default_ads(2, 3);
  auto s = fresh(ads, default_contracts(ads, 1));
  std::vector<std::pair<std::string, std::uint64_t>> fired;
  register_retirement_triggers(s, ads, [&](const Ad& ad, std::uint64_t local) {
    fired.emplace_back(ad.id, local);
  });
  for (int i = 0; i < 2; ++i) s.update(counter_variable("ad00"), mutators::increment(kClient));
  EXPECT_EQ(displayable(s).size(), 2u);
  EXPECT_TRUE(fired.empty());
  s.update(counter_variable("ad00"), mutators::increment(kClient));
  EXPECT_EQ(displayable(s), (std::vector<std::string>{"ad01"}));
  ASSERT_EQ(fired.size(), 1u);
  EXPECT_EQ(fired[0].first, "ad00");
  EXPECT_GE(fired[0].second, 3u);
  // One-shot: more increments do not fire again.
  s.update(counter_variable("ad00"), mutators::increment(kClient));
  EXPECT_EQ(fired.size(), 1u);
  // The removal is a pending local delta for dissemination.
  bool removal = false;
  for (const auto& [var, d] : s.take_local_deltas()) removal |= var == kAds;
  EXPECT_TRUE(removal);
}

TEST(ScenarioTest, MergedCountCanFireTrigger) {
  auto ads = default_ads(1, 5);
  auto s = fresh(ads, default_contracts(ads, 1));
  std::uint64_t seen = 0;
  register_retirement_triggers(s, ads, [&](const Ad&, std::uint64_t local) { seen = local; });
  s.merge(counter_variable("ad00"), GCounter::from_entries({{kClient, 9}}));
  EXPECT_EQ(seen, 9u);
  EXPECT_TRUE(displayable(s).empty());
}

TEST(ScenarioTest, ConcurrentRemovalsAgree) {
  // Server and client both retire the same ad, then exchange states.
  auto ads = default_ads(2, 2);
  auto contracts = default_contracts(ads, 1);
  auto a = fresh(ads, contracts);
  auto b = fresh(ads, contracts);
  register_retirement_triggers(a, ads);
  register_retirement_triggers(b, ads);
  const auto bump = GCounter::from_entries({{kClient, 2}});
  a.merge(counter_variable("ad01"), bump);
  b.merge(counter_variable("ad01"), bump);
  a.merge(kAds, b.state(kAds));
  b.merge(kAds, a.state(kAds));
  EXPECT_EQ(a.state(kAds), b.state(kAds));
  EXPECT_EQ(displayable(a), (std::vector<std::string>{"ad00"}));
  EXPECT_EQ(displayable(b), displayable(a));
}

TEST(ScenarioTest, IdenticalInitialStates) {
  auto ads = default_ads(4, 9);
  auto a = fresh(ads, default_contracts(ads, 2));
  auto b = fresh(ads, default_contracts(ads, 2));
  for (const auto& v : a.sources()) EXPECT_EQ(a.state(v), b.state(v)) << v;
}

}  // namespace
}  // namespace lasp::scenario
