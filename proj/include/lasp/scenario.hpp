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

#ifndef LASP_SCENARIO_HPP_
#define LASP_SCENARIO_HPP_

// The advertisement counter: a set of ads, a set of contracts, one grow-only
// counter per ad, and a derived set of displayable ads. Clients pick a
// displayable ad at random and bump its counter; a threshold trigger removes
// an ad from the ads set once its counter is high enough.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasp/dataflow.hpp"
#include "lasp/rng.hpp"

namespace lasp::scenario {

using dataflow::Store;
using dataflow::VariableId;

inline const VariableId kAds = "ads";
inline const VariableId kContracts = "contracts";
inline const VariableId kAdContractPairs = "ads_x_contracts";
inline const VariableId kValidPairs = "valid_pairs";
inline const VariableId kDisplayable = "displayable";
inline const VariableId kSpillover = "spillover";

struct Ad {
  std::string id;
  std::uint64_t threshold = 1;
};

struct Contract {
  std::string id;
  std::string ad_id;
};

inline VariableId counter_variable(const std::string& ad_id) { return "counter:" + ad_id; }

/// `count` ads named ad00, ad01, ... sharing one threshold.
inline std::vector<Ad> default_ads(std::size_t count, std::uint64_t threshold) {
  std::vector<Ad> ads;
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "ad%02zu", i);
    ads.push_back(Ad{name, threshold});
  }
  return ads;
}

inline std::vector<Contract> default_contracts(const std::vector<Ad>& ads,
                                               std::size_t per_ad) {
  std::vector<Contract> out;
  for (const auto& ad : ads) {
    for (std::size_t k = 0; k < per_ad; ++k) {
      out.push_back(Contract{"k" + std::to_string(k) + ":" + ad.id, ad.id});
    }
  }
  return out;
}

/// Declares every scenario variable and the displayable pipeline
/// ads x contracts -> filter(contract names the ad) -> map(ad id).
/// Every node runs this with the same `creator`, so the initial states are
/// identical everywhere and need no dissemination.
inline void initialize(Store& store, const std::vector<Ad>& ads,
                       const std::vector<Contract>& contracts, const ActorId& creator) {
  std::set<std::string> seen;
  for (const auto& ad : ads) {
    if (!seen.insert(ad.id).second) {
      throw std::invalid_argument("duplicate ad id '" + ad.id + "'");
    }
    if (ad.threshold == 0) throw std::invalid_argument("ad threshold must be positive");
  }
  store.declare(kAds, AWSet{});
  store.declare(kContracts, AWSet{});
  store.declare(kAdContractPairs, AWSet{});
  store.declare(kValidPairs, AWSet{});
  store.declare(kDisplayable, AWSet{});
  store.declare(kSpillover, GCounter{});
  for (const auto& ad : ads) {
    store.declare(counter_variable(ad.id), GCounter{});
    store.update(kAds, mutators::add(creator, Element(ad.id)));
  }
  for (const auto& c : contracts) {
    store.update(kContracts, mutators::add(creator, Element::tuple({c.id, c.ad_id})));
  }

  store.product(kAds, kContracts, kAdContractPairs);
  store.filter(
      kAdContractPairs,
      [](const Element& pair) {
        const auto& t = pair.as_tuple();
        return t[0] == t[1].as_tuple()[1];
      },
      kValidPairs);
  store.map(
      kValidPairs, [](const Element& pair) { return pair.as_tuple()[0]; }, kDisplayable);
  // The initial adds are part of the common starting point, not news.
  store.take_local_deltas();
}

inline std::vector<std::string> displayable(const Store& store) {
  std::vector<std::string> out;
  for (const auto& e : store.state(kDisplayable).as<AWSet>().elements()) {
    out.push_back(e.as_string());
  }
  return out;
}

/// One impression: uniform pick over the local displayable set, or the
/// spillover counter when it is empty. Returns the variable incremented.
inline VariableId client_impression(Store& store, const ActorId& actor, Rng& rng) {
  const auto ads = displayable(store);
  const VariableId target = ads.empty() ? kSpillover : counter_variable(rng.pick(ads));
  store.update(target, mutators::increment(actor));
  return target;
}

/// Sum of every ad counter plus spillover on this replica.
inline std::uint64_t grand_total(const Store& store, const std::vector<Ad>& ads) {
  std::uint64_t total = store.state(kSpillover).as<GCounter>().value();
  for (const auto& ad : ads) {
    total += store.state(counter_variable(ad.id)).as<GCounter>().value();
  }
  return total;
}

/// Called when a retirement trigger fires, with the local counter value at
/// that moment.
using RetireHook = std::function<void(const Ad&, std::uint64_t local_count)>;

/// For each ad, a one-shot trigger on (counter >= threshold) that removes the
/// ad from the ads set.
inline void register_retirement_triggers(Store& store, const std::vector<Ad>& ads,
                                         RetireHook hook = {}) {
  for (const auto& ad : ads) {
    const VariableId counter = counter_variable(ad.id);
    store.read_threshold(
        counter,
        [threshold = ad.threshold](const LatticeState& s) {
          return s.as<GCounter>().value() >= threshold;
        },
        [ad, counter, hook](Store& st) {
          const auto local = st.state(counter).as<GCounter>().value();
          if (hook) hook(ad, local);
          st.update(kAds, mutators::remove(Element(ad.id)));
        });
  }
}

}  // namespace lasp::scenario

#endif  // LASP_SCENARIO_HPP_
