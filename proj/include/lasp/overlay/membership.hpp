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

#ifndef LASP_OVERLAY_MEMBERSHIP_HPP_
#define LASP_OVERLAY_MEMBERSHIP_HPP_

#include <set>
#include <utility>

#include "lasp/element.hpp"

namespace lasp::overlay {

/// A node's partial view of the cluster: active peers receive gossip,
/// passive peers are repair candidates.
///
/// Invariants: owner is in neither set; the sets are disjoint. Size bounds
/// are enforced by the protocol that maintains the view, not by the view.
struct MembershipView {
  ActorId owner;
  std::set<ActorId> active;
  std::set<ActorId> passive;

  MembershipView() = default;
  explicit MembershipView(ActorId o) : owner(std::move(o)) {}

  bool is_active(const ActorId& p) const { return active.contains(p); }
  bool is_passive(const ActorId& p) const { return passive.contains(p); }
  bool isolated() const { return active.empty(); }

  friend bool operator==(const MembershipView&, const MembershipView&) = default;
};

}  // namespace lasp::overlay

#endif  // LASP_OVERLAY_MEMBERSHIP_HPP_
