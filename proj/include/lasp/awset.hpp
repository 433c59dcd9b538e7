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

#ifndef LASP_AWSET_HPP_
#define LASP_AWSET_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "lasp/element.hpp"
#include "lasp/encoding.hpp"
#include "lasp/gcounter.hpp"

namespace lasp {

/// Unique event tag: the `sequence`-th event issued by `actor`.
struct Dot {
  ActorId actor;
  std::uint64_t sequence = 0;

  template <codec::ByteSink S>
  void encode(S& sink) const {
    actor.encode(sink);
    sink.u64(sequence);
  }

  friend bool operator==(const Dot&, const Dot&) = default;
  friend std::strong_ordering operator<=>(const Dot&, const Dot&) = default;
};

/// Set of observed dots, stored as a per-actor contiguous prefix plus a
/// sparse cloud of dots beyond it. Always kept compact: no cloud dot is
/// covered by or adjacent to its actor's prefix.
class CausalContext {
 public:
  bool contains(const Dot& d) const {
    auto it = prefix_.find(d.actor);
    if (it != prefix_.end() && d.sequence <= it->second) return true;
    return cloud_.contains(d);
  }

  std::uint64_t max_sequence(const ActorId& actor) const {
    std::uint64_t best = 0;
    if (auto it = prefix_.find(actor); it != prefix_.end()) best = it->second;
    // Cloud is ordered by (actor, sequence); the last dot for actor is max.
    auto it = cloud_.lower_bound(Dot{actor, UINT64_MAX});
    if (it != cloud_.begin()) {
      --it;
      if (it->actor == actor) best = std::max(best, it->sequence);
    }
    return best;
  }

  Dot next_dot(const ActorId& actor) const {
    return Dot{actor, max_sequence(actor) + 1};
  }

  void insert(const Dot& d) {
    if (contains(d)) return;
    cloud_.insert(d);
    compact();
  }

  void merge(const CausalContext& other) {
    for (const auto& [actor, n] : other.prefix_) {
      auto& mine = prefix_[actor];
      mine = std::max(mine, n);
    }
    cloud_.insert(other.cloud_.begin(), other.cloud_.end());
    compact();
  }

  const std::map<ActorId, std::uint64_t>& prefix() const { return prefix_; }
  const std::set<Dot>& cloud() const { return cloud_; }
  bool empty() const { return prefix_.empty() && cloud_.empty(); }

  template <codec::ByteSink S>
  void encode(S& sink) const {
    sink.u32(codec::ByteWriter::checked_length(prefix_.size()));
    for (const auto& [actor, n] : prefix_) {
      actor.encode(sink);
      sink.u64(n);
    }
    sink.u32(codec::ByteWriter::checked_length(cloud_.size()));
    for (const auto& d : cloud_) d.encode(sink);
  }

  friend bool operator==(const CausalContext&, const CausalContext&) = default;

 private:
  void compact() {
    for (auto it = cloud_.begin(); it != cloud_.end();) {
      auto p = prefix_.find(it->actor);
      const std::uint64_t have = p == prefix_.end() ? 0 : p->second;
      if (it->sequence <= have) {
        it = cloud_.erase(it);
      } else if (it->sequence == have + 1) {
        prefix_[it->actor] = it->sequence;
        it = cloud_.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::map<ActorId, std::uint64_t> prefix_;
  std::set<Dot> cloud_;
};

/// Add-wins (observed-remove) set as a dot store plus causal context.
///
/// Invariant: every dot in the store is in the context; an element is a
/// member iff its dot set is non-empty.
class AWSet {
 public:
  using DotStore = std::map<Element, std::set<Dot>>;

  AWSet() = default;

  /// Set whose membership is `elements`, each tagged with a dot whose
  /// sequence is derived from the element's encoding. Two calls with the
  /// same membership yield structurally equal sets.
  static AWSet canonical(const std::vector<Element>& elements,
                         const ActorId& tag) {
    AWSet out;
    for (const auto& e : elements) {
      std::uint64_t h = codec::fnv1a(codec::encode(e));
      if (h == 0) h = 1;
      Dot d{tag, h};
      out.store_[e].insert(d);
      out.context_.insert(d);
    }
    return out;
  }

  bool contains(const Element& e) const { return store_.contains(e); }
  std::size_t size() const { return store_.size(); }
  bool empty() const { return store_.empty(); }

  std::vector<Element> elements() const {
    std::vector<Element> out;
    out.reserve(store_.size());
    for (const auto& [e, dots] : store_) out.push_back(e);
    return out;
  }

  const DotStore& dot_store() const { return store_; }
  const CausalContext& context() const { return context_; }

  /// Tags `e` with a fresh dot; the element's previous dots are superseded.
  Mutated<AWSet> add(const ActorId& actor, const Element& e) const {
    const Dot fresh = context_.next_dot(actor);

    AWSet delta;
    delta.store_[e].insert(fresh);
    delta.context_.insert(fresh);
    if (auto it = store_.find(e); it != store_.end()) {
      for (const auto& d : it->second) delta.context_.insert(d);
    }

    AWSet state = *this;
    state.store_[e] = {fresh};
    state.context_.insert(fresh);
    return {std::move(state), std::move(delta)};
  }

  /// Removes the observed dots of `e`. Absent elements give a no-op delta.
  Mutated<AWSet> remove(const Element& e) const {
    AWSet delta;
    AWSet state = *this;
    if (auto it = state.store_.find(e); it != state.store_.end()) {
      for (const auto& d : it->second) delta.context_.insert(d);
      state.store_.erase(it);
    }
    return {std::move(state), std::move(delta)};
  }

  friend AWSet join(const AWSet& a, const AWSet& b) {
    AWSet out;
    auto keep = [&](const std::set<Dot>& mine, const std::set<Dot>& theirs,
                    const CausalContext& their_ctx, std::set<Dot>& into) {
      for (const auto& d : mine) {
        if (theirs.contains(d) || !their_ctx.contains(d)) into.insert(d);
      }
    };
    static const std::set<Dot> kNone;
    auto i = a.store_.begin();
    auto j = b.store_.begin();
    while (i != a.store_.end() || j != b.store_.end()) {
      std::set<Dot> dots;
      const Element* key;
      if (j == b.store_.end() || (i != a.store_.end() && i->first < j->first)) {
        key = &i->first;
        keep(i->second, kNone, b.context_, dots);
        ++i;
      } else if (i == a.store_.end() || j->first < i->first) {
        key = &j->first;
        keep(j->second, kNone, a.context_, dots);
        ++j;
      } else {
        key = &i->first;
        keep(i->second, j->second, b.context_, dots);
        keep(j->second, i->second, a.context_, dots);
        ++i;
        ++j;
      }
      if (!dots.empty()) out.store_.emplace_hint(out.store_.end(), *key, std::move(dots));
    }
    out.context_ = a.context_;
    out.context_.merge(b.context_);
    return out;
  }

  bool includes(const AWSet& other) const { return join(*this, other) == *this; }

  template <codec::ByteSink S>
  void encode(S& sink) const {
    sink.u32(codec::ByteWriter::checked_length(store_.size()));
    for (const auto& [e, dots] : store_) {
      e.encode(sink);
      sink.u32(codec::ByteWriter::checked_length(dots.size()));
      for (const auto& d : dots) d.encode(sink);
    }
    context_.encode(sink);
  }

  friend bool operator==(const AWSet&, const AWSet&) = default;

 private:
  DotStore store_;
  CausalContext context_;
};

}  // namespace lasp

#endif  // LASP_AWSET_HPP_
