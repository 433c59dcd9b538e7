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

#ifndef LASP_GCOUNTER_HPP_
#define LASP_GCOUNTER_HPP_

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lasp/element.hpp"
#include "lasp/encoding.hpp"

namespace lasp {

/// Result of a mutator: the inflated state and the delta that produces it.
template <typename T>
struct Mutated {
  T state;
  T delta;
};

/// Grow-only counter: one non-negative count per actor, value is the sum.
///
/// Entries are kept sorted by actor with no zero counts, so structural
/// equality is lattice equality.
class GCounter {
 public:
  using Entry = std::pair<ActorId, std::uint64_t>;

  GCounter() = default;

  /// Builds a counter from arbitrary entries; duplicates keep the max.
  static GCounter from_entries(std::vector<Entry> entries) {
    GCounter out;
    std::sort(entries.begin(), entries.end());
    for (auto& [actor, n] : entries) {
      if (n == 0) continue;
      if (!out.entries_.empty() && out.entries_.back().first == actor) {
        out.entries_.back().second = std::max(out.entries_.back().second, n);
      } else {
        out.entries_.emplace_back(std::move(actor), n);
      }
    }
    return out;
  }

  std::uint64_t value() const {
    return std::accumulate(
        entries_.begin(), entries_.end(), std::uint64_t{0},
        [](std::uint64_t acc, const Entry& e) { return acc + e.second; });
  }

  std::uint64_t count(const ActorId& actor) const {
    auto it = find(actor);
    return it != entries_.end() && it->first == actor ? it->second : 0;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  Mutated<GCounter> increment(const ActorId& actor,
                              std::uint64_t amount = 1) const {
    if (amount == 0) {
      throw std::invalid_argument("gcounter increment: amount must be >= 1");
    }
    const std::uint64_t next = count(actor) + amount;
    GCounter delta;
    delta.entries_.emplace_back(actor, next);
    GCounter state = *this;
    auto it = state.find(actor);
    if (it != state.entries_.end() && it->first == actor) {
      it->second = next;
    } else {
      state.entries_.insert(it, Entry{actor, next});
    }
    return {std::move(state), std::move(delta)};
  }

  /// Pointwise max.
  friend GCounter join(const GCounter& a, const GCounter& b) {
    GCounter out;
    out.entries_.reserve(std::max(a.entries_.size(), b.entries_.size()));
    auto i = a.entries_.begin();
    auto j = b.entries_.begin();
    while (i != a.entries_.end() || j != b.entries_.end()) {
      if (j == b.entries_.end() || (i != a.entries_.end() && i->first < j->first)) {
        out.entries_.push_back(*i++);
      } else if (i == a.entries_.end() || j->first < i->first) {
        out.entries_.push_back(*j++);
      } else {
        out.entries_.emplace_back(i->first, std::max(i->second, j->second));
        ++i;
        ++j;
      }
    }
    return out;
  }

  /// True iff `other` <= *this in the lattice order.
  bool includes(const GCounter& other) const {
    auto i = entries_.begin();
    for (const auto& [actor, n] : other.entries_) {
      while (i != entries_.end() && i->first < actor) ++i;
      if (i == entries_.end() || i->first != actor || i->second < n) {
        return false;
      }
    }
    return true;
  }

  template <codec::ByteSink S>
  void encode(S& sink) const {
    sink.u32(codec::ByteWriter::checked_length(entries_.size()));
    for (const auto& [actor, n] : entries_) {
      actor.encode(sink);
      sink.u64(n);
    }
  }

  friend bool operator==(const GCounter&, const GCounter&) = default;

 private:
  std::vector<Entry>::iterator find(const ActorId& actor) {
    return std::lower_bound(
        entries_.begin(), entries_.end(), actor,
        [](const Entry& e, const ActorId& a) { return e.first < a; });
  }
  std::vector<Entry>::const_iterator find(const ActorId& actor) const {
    return std::lower_bound(
        entries_.begin(), entries_.end(), actor,
        [](const Entry& e, const ActorId& a) { return e.first < a; });
  }

  std::vector<Entry> entries_;
};

}  // namespace lasp

#endif  // LASP_GCOUNTER_HPP_
