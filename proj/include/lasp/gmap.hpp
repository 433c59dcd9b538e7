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

#ifndef LASP_GMAP_HPP_
#define LASP_GMAP_HPP_

#include <algorithm>
#include <utility>
#include <vector>

#include "lasp/element.hpp"
#include "lasp/encoding.hpp"
#include "lasp/gcounter.hpp"

namespace lasp {

/// Grow-only map from node id to a boolean flag; flags join with OR.
class GMap {
 public:
  using Entry = std::pair<ActorId, bool>;

  bool flag(const ActorId& key) const {
    auto it = find(key);
    return it != entries_.end() && it->first == key && it->second;
  }

  bool has_key(const ActorId& key) const {
    auto it = find(key);
    return it != entries_.end() && it->first == key;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  Mutated<GMap> set_true(const ActorId& key) const {
    GMap delta;
    delta.entries_.emplace_back(key, true);
    GMap state = *this;
    auto it = state.find(key);
    if (it != state.entries_.end() && it->first == key) {
      it->second = true;
    } else {
      state.entries_.insert(it, Entry{key, true});
    }
    return {std::move(state), std::move(delta)};
  }

  friend GMap join(const GMap& a, const GMap& b) {
    GMap out;
    auto i = a.entries_.begin();
    auto j = b.entries_.begin();
    while (i != a.entries_.end() || j != b.entries_.end()) {
      if (j == b.entries_.end() || (i != a.entries_.end() && i->first < j->first)) {
        out.entries_.push_back(*i++);
      } else if (i == a.entries_.end() || j->first < i->first) {
        out.entries_.push_back(*j++);
      } else {
        out.entries_.emplace_back(i->first, i->second || j->second);
        ++i;
        ++j;
      }
    }
    return out;
  }

  bool includes(const GMap& other) const {
    for (const auto& [key, f] : other.entries_) {
      auto it = find(key);
      if (it == entries_.end() || it->first != key) return false;
      if (f && !it->second) return false;
    }
    return true;
  }

  template <codec::ByteSink S>
  void encode(S& sink) const {
    sink.u32(codec::ByteWriter::checked_length(entries_.size()));
    for (const auto& [key, f] : entries_) {
      key.encode(sink);
      sink.u8(f ? 1 : 0);
    }
  }

  friend bool operator==(const GMap&, const GMap&) = default;

 private:
  std::vector<Entry>::iterator find(const ActorId& key) {
    return std::lower_bound(
        entries_.begin(), entries_.end(), key,
        [](const Entry& e, const ActorId& k) { return e.first < k; });
  }
  std::vector<Entry>::const_iterator find(const ActorId& key) const {
    return std::lower_bound(
        entries_.begin(), entries_.end(), key,
        [](const Entry& e, const ActorId& k) { return e.first < k; });
  }

  std::vector<Entry> entries_;
};

}  // namespace lasp

#endif  // LASP_GMAP_HPP_
