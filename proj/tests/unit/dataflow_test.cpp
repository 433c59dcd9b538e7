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

#include <algorithm>
#include <set>

#include "lasp/dataflow.hpp"
#include "lasp/rng.hpp"

namespace lasp::dataflow {
namespace {

const ActorId kA("a");
const ActorId kB("b");

std::vector<Element> members(const Store& s, const VariableId& id) {
  return s.state(id).as<AWSet>().elements();
}

Store with_sets(std::initializer_list<VariableId> ids) {
  Store s;
  for (const auto& id : ids) s.declare(id, AWSet{});
  return s;
}

void add_all(Store& s, const VariableId& id, std::initializer_list<Element> xs) {
  for (const auto& x : xs) s.update(id, mutators::add(kA, x));
}

TEST(DataflowTest, DeclareGivesBottom) {
  Store s;
  s.declare("ads", AWSet{});
  EXPECT_TRUE(members(s, "ads").empty());
  s.declare("c1", GCounter{});
  EXPECT_EQ(s.state("c1").as<GCounter>().value(), 0u);
}

TEST(DataflowTest, DuplicateDeclareFails) {
  Store s;
  s.declare("ads", AWSet{});
  EXPECT_THROW(s.declare("ads", AWSet{}), DataflowError);
}

TEST(DataflowTest, UpdateCounter) {
  Store s;
  s.declare("c1", GCounter{});
  auto d = s.update("c1", mutators::increment(kA));
  EXPECT_EQ(s.state("c1").as<GCounter>().value(), 1u);
  EXPECT_EQ(d, LatticeState(GCounter::from_entries({{kA, 1}})));
}

TEST(DataflowTest, UpdateDerivedFails) {
  Store s = with_sets({"src", "dst"});
  s.filter("src", [](const Element&) { return true; }, "dst");
  EXPECT_THROW(s.update("dst", mutators::add(kA, 1)), DataflowError);
  EXPECT_THROW(s.merge("dst", AWSet{}), DataflowError);
}

TEST(DataflowTest, UnknownVariableFails) {
  Store s;
  EXPECT_THROW(s.update("nope", mutators::increment(kA)), DataflowError);
}

TEST(DataflowTest, VariantCannotChange) {
  Store s;
  s.declare("c", GCounter{});
  EXPECT_THROW(s.merge("c", AWSet{}), StructuralError);
}

TEST(DataflowTest, Product) {
  Store s = with_sets({"a", "b", "ab"});
  s.product("a", "b", "ab");
  add_all(s, "a", {"x"});
  add_all(s, "b", {"p", "q"});
  EXPECT_EQ(members(s, "ab"),
            (std::vector<Element>{Element::tuple({"x", "p"}), Element::tuple({"x", "q"})}));
}

TEST(DataflowTest, ProductWithEmpty) {
  Store s = with_sets({"a", "b", "ab"});
  s.product("a", "b", "ab");
  add_all(s, "a", {"x", "y"});
  EXPECT_TRUE(members(s, "ab").empty());
}

TEST(DataflowTest, FilterEvens) {
  Store s = with_sets({"n", "even"});
  s.filter("n", [](const Element& e) { return e.as_int() % 2 == 0; }, "even");
  add_all(s, "n", {1, 2, 3, 4});
  EXPECT_EQ(members(s, "even"), (std::vector<Element>{2, 4}));
}

TEST(DataflowTest, FilterOverEmpty) {
  Store s = with_sets({"n", "even"});
  s.filter("n", [](const Element&) { return true; }, "even");
  EXPECT_TRUE(members(s, "even").empty());
}

TEST(DataflowTest, MapIncrement) {
  Store s = with_sets({"n", "m"});
  s.map("n", [](const Element& e) { return Element(e.as_int() + 1); }, "m");
  add_all(s, "n", {1, 2});
  EXPECT_EQ(members(s, "m"), (std::vector<Element>{2, 3}));
}

TEST(DataflowTest, MapNonInjective) {
  Store s = with_sets({"n", "m"});
  s.map("n", [](const Element& e) { return Element(e.as_int() % 2); }, "m");
  add_all(s, "n", {1, 3});
  EXPECT_EQ(members(s, "m"), (std::vector<Element>{1}));
}

TEST(DataflowTest, CycleRejected) {
  Store s = with_sets({"a", "b", "c"});
  s.map("a", [](const Element& e) { return e; }, "b");
  s.map("b", [](const Element& e) { return e; }, "c");
  EXPECT_THROW(s.map("c", [](const Element& e) { return e; }, "a"), DataflowError);
  EXPECT_THROW(s.filter("a", [](const Element&) { return true; }, "a"), DataflowError);
}

TEST(DataflowTest, SecondDefiningEdgeRejected) {
  Store s = with_sets({"a", "b"});
  s.map("a", [](const Element& e) { return e; }, "b");
  EXPECT_THROW(s.map("a", [](const Element& e) { return e; }, "b"), DataflowError);
}

TEST(DataflowTest, UpdateReachesDownstreamFilter) {
  Store s = with_sets({"n", "even"});
  s.filter("n", [](const Element& e) { return e.as_int() % 2 == 0; }, "even");
  add_all(s, "n", {6});
  EXPECT_EQ(members(s, "even"), (std::vector<Element>{6}));
  s.update("n", mutators::remove(6));
  EXPECT_TRUE(members(s, "even").empty());
}

TEST(DataflowTest, MapAfterFilterMatchesComposition) {
  Store s = with_sets({"n", "odd", "sq"});
  s.filter("n", [](const Element& e) { return e.as_int() % 2 != 0; }, "odd");
  s.map("odd", [](const Element& e) { return Element(e.as_int() * e.as_int()); }, "sq");
  Rng rng(3);
  std::set<std::int64_t> oracle_in;
  for (int i = 0; i < 200; ++i) {
    const auto x = static_cast<std::int64_t>(rng.below(20));
    if (rng.chance(0.3)) {
      s.update("n", mutators::remove(x));
      oracle_in.erase(x);
    } else {
      s.update("n", mutators::add(kA, x));
      oracle_in.insert(x);
    }
    std::set<Element> oracle;
    for (auto v : oracle_in) {
      if (v % 2 != 0) oracle.insert(Element(v * v));
    }
    ASSERT_EQ(members(s, "sq"), std::vector<Element>(oracle.begin(), oracle.end()));
  }
}

// Ads x contracts -> filter(matching ad) -> map(ad), checked against a
// brute-force relational join of the inputs.
TEST(DataflowTest, ProductFilterMatchesRelationalJoin) {
  Rng rng(4);
  for (int run = 0; run < 200; ++run) {
    Store s = with_sets({"ads", "contracts", "pairs", "valid", "out"});
    s.product("ads", "contracts", "pairs");
    s.filter("pairs",
             [](const Element& e) {
               return e.as_tuple()[0] == e.as_tuple()[1].as_tuple()[1];
             },
             "valid");
    s.map("valid", [](const Element& e) { return e.as_tuple()[0]; }, "out");

    std::set<std::string> ads;
    std::set<std::pair<std::string, std::string>> contracts;
    for (auto n = rng.below(6); n > 0; --n) {
      std::string ad = "ad" + std::to_string(rng.below(5));
      s.update("ads", mutators::add(kA, ad));
      ads.insert(ad);
    }
    for (auto n = rng.below(6); n > 0; --n) {
      std::string c = "k" + std::to_string(rng.below(4));
      std::string ad = "ad" + std::to_string(rng.below(5));
      s.update("contracts", mutators::add(kB, Element::tuple({c, ad})));
      contracts.emplace(c, ad);
    }
    std::set<Element> oracle;
    for (const auto& ad : ads) {
      for (const auto& [c, cad] : contracts) {
        if (cad == ad) oracle.insert(Element(ad));
      }
    }
    ASSERT_EQ(members(s, "out"), std::vector<Element>(oracle.begin(), oracle.end()));
  }
}

TEST(DataflowTest, ProductAfterMergesEqualsProductOfJoins) {
  Rng rng(5);
  for (int run = 0; run < 200; ++run) {
    AWSet a1, a2, b1;
    for (int i = 0; i < 4; ++i) {
      a1 = a1.add(kA, static_cast<std::int64_t>(rng.below(5))).state;
      a2 = a2.add(kB, static_cast<std::int64_t>(rng.below(5))).state;
      b1 = b1.add(kB, static_cast<std::int64_t>(10 + rng.below(5))).state;
    }
    Store s = with_sets({"a", "b", "ab"});
    s.product("a", "b", "ab");
    s.merge("a", a1);
    s.merge("b", b1);
    s.merge("a", a2);
    std::vector<Element> oracle;
    for (const auto& x : join(a1, a2).elements()) {
      for (const auto& y : b1.elements()) oracle.push_back(Element::tuple({x, y}));
    }
    std::sort(oracle.begin(), oracle.end());
    ASSERT_EQ(members(s, "ab"), oracle);
  }
}

TEST(DataflowTest, MergeAutoDeclaresUnknown) {
  Store s;
  EXPECT_TRUE(s.merge("late", GCounter::from_entries({{kA, 3}})));
  EXPECT_EQ(s.kind("late"), Kind::source);
  EXPECT_EQ(s.state("late").as<GCounter>().value(), 3u);
  EXPECT_FALSE(s.merge("late", GCounter::from_entries({{kA, 2}})));
}

TEST(DataflowTest, NoOpUpdateProducesNoLocalDelta) {
  Store s;
  s.declare("flags", GMap{});
  s.update("flags", mutators::set_true(kA));
  s.update("flags", mutators::set_true(kA));
  EXPECT_EQ(s.take_local_deltas().size(), 1u);
  EXPECT_TRUE(s.take_local_deltas().empty());
}

// --- monotonic triggers ----------------------------------------------------

Store::Condition at_least(std::uint64_t n) {
  return [n](const LatticeState& s) { return s.as<GCounter>().value() >= n; };
}

TEST(DataflowTest, ThresholdFiresOnReaching) {
  Store s;
  s.declare("c", GCounter{});
  int fired = 0;
  s.read_threshold("c", at_least(3), [&](Store&) { ++fired; });
  s.update("c", mutators::increment(kA));
  s.update("c", mutators::increment(kA));
  EXPECT_EQ(fired, 0);
  s.update("c", mutators::increment(kA));
  EXPECT_EQ(fired, 1);
  s.update("c", mutators::increment(kA));
  EXPECT_EQ(fired, 1);
}

TEST(DataflowTest, ThresholdAlreadyTrueFiresImmediately) {
  Store s;
  s.declare("c", GCounter::from_entries({{kA, 5}}));
  int fired = 0;
  auto id = s.read_threshold("c", at_least(3), [&](Store&) { ++fired; });
  EXPECT_EQ(fired, 1);
  EXPECT_TRUE(s.fired(id));
}

TEST(DataflowTest, ThresholdActionMayUpdateStore) {
  Store s = with_sets({"ads"});
  s.declare("c", GCounter{});
  s.update("ads", mutators::add(kA, "ad1"));
  s.read_threshold("c", at_least(2),
                   [](Store& st) { st.update("ads", mutators::remove("ad1")); });
  s.merge("c", GCounter::from_entries({{kB, 2}}));
  EXPECT_TRUE(members(s, "ads").empty());
}

TEST(DataflowTest, ThresholdFiresExactlyOnceAcrossSchedules) {
  Rng rng(6);
  for (int run = 0; run < 1000; ++run) {
    Store s;
    s.declare("c", GCounter{});
    const std::uint64_t threshold = 1 + rng.below(10);
    int fired = 0;
    std::uint64_t value_at_fire = 0;
    s.read_threshold("c", at_least(threshold), [&](Store& st) {
      ++fired;
      value_at_fire = st.state("c").as<GCounter>().value();
    });
    for (int step = 0; step < 15; ++step) {
      const bool was = s.state("c").as<GCounter>().value() >= threshold;
      if (rng.chance(0.5)) {
        s.update("c", mutators::increment(kA, 1 + rng.below(2)));
      } else {
        s.merge("c", GCounter::from_entries({{kB, rng.below(8)}}));
      }
      const bool now = s.state("c").as<GCounter>().value() >= threshold;
      // Never before the condition holds, and at the first change where it does.
      ASSERT_EQ(fired, now ? 1 : 0);
      if (now && !was) {
        ASSERT_GE(value_at_fire, threshold);
      }
    }
  }
}

// --- purity and confluence ------------------------------------------------

struct Pipeline {
  Store store = with_sets({"ads", "contracts", "pairs", "valid", "out"});
  Pipeline() {
    store.product("ads", "contracts", "pairs");
    store.filter("pairs",
                 [](const Element& e) { return e.as_tuple()[0] == e.as_tuple()[1]; },
                 "valid");
    store.map("valid", [](const Element& e) { return e.as_tuple()[0]; }, "out");
  }
};

TEST(DataflowTest, DerivedEqualsRecomputationFromSources) {
  Rng rng(7);
  Pipeline p;
  for (int step = 0; step < 500; ++step) {
    const VariableId var = rng.chance(0.5) ? "ads" : "contracts";
    const auto x = static_cast<std::int64_t>(rng.below(8));
    if (rng.chance(0.3)) {
      p.store.update(var, mutators::remove(x));
    } else {
      p.store.update(var, mutators::add(rng.chance(0.5) ? kA : kB, x));
    }
    // Oracle: intersection of the two source memberships.
    std::vector<Element> oracle;
    const auto ads = members(p.store, "ads");
    const auto cs = members(p.store, "contracts");
    std::set_intersection(ads.begin(), ads.end(), cs.begin(), cs.end(),
                          std::back_inserter(oracle));
    ASSERT_EQ(members(p.store, "out"), oracle);
  }
}

TEST(DataflowTest, ConfluenceUnderDeltaPermutation) {
  Rng rng(8);
  for (int run = 0; run < 200; ++run) {
    Pipeline origin;
    std::vector<std::pair<VariableId, Delta>> deltas;
    for (int step = 0; step < 12; ++step) {
      const VariableId var = rng.chance(0.5) ? "ads" : "contracts";
      const auto x = static_cast<std::int64_t>(rng.below(5));
      auto d = rng.chance(0.25) ? origin.store.update(var, mutators::remove(x))
                                : origin.store.update(var, mutators::add(kA, x));
      deltas.emplace_back(var, d);
    }
    Pipeline r1, r2;
    auto shuffled = deltas;
    rng.shuffle(shuffled);
    for (const auto& [v, d] : deltas) r1.store.merge(v, d);
    for (const auto& [v, d] : shuffled) r2.store.merge(v, d);
    ASSERT_EQ(r1.store.state("out"), r2.store.state("out"));
    ASSERT_EQ(r1.store.state("out"), origin.store.state("out"));
  }
}

}  // namespace
}  // namespace lasp::dataflow
