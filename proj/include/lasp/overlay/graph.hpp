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

#ifndef LASP_OVERLAY_GRAPH_HPP_
#define LASP_OVERLAY_GRAPH_HPP_

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "lasp/overlay/membership.hpp"

namespace lasp::overlay {

/// Undirected graph over node ids. Edge (u, v) exists iff v is in u's
/// active view or u is in v's.
class OverlayGraph {
 public:
  template <typename Views>
  static OverlayGraph from_views(const Views& views) {
    OverlayGraph g;
    for (const MembershipView& v : views) {
      g.add_node(v.owner);
      for (const auto& p : v.active) g.add_edge(v.owner, p);
    }
    return g;
  }

  void add_node(const ActorId& n) { adjacency_[n]; }

  void add_edge(const ActorId& a, const ActorId& b) {
    if (a == b) return;
    adjacency_[a].insert(b);
    adjacency_[b].insert(a);
  }

  bool has_node(const ActorId& n) const { return adjacency_.contains(n); }
  bool has_edge(const ActorId& a, const ActorId& b) const {
    auto it = adjacency_.find(a);
    return it != adjacency_.end() && it->second.contains(b);
  }

  const std::set<ActorId>& neighbors(const ActorId& n) const {
    return adjacency_.at(n);
  }

  std::size_t node_count() const { return adjacency_.size(); }

  std::size_t edge_count() const {
    std::size_t twice = 0;
    for (const auto& [n, adj] : adjacency_) twice += adj.size();
    return twice / 2;
  }

  std::vector<ActorId> nodes() const {
    std::vector<ActorId> out;
    for (const auto& [n, adj] : adjacency_) out.push_back(n);
    return out;
  }

  /// Hop distance from `src` to every node reachable from it.
  std::map<ActorId, std::size_t> distances_from(const ActorId& src) const {
    std::map<ActorId, std::size_t> dist{{src, 0}};
    std::deque<ActorId> queue{src};
    while (!queue.empty()) {
      ActorId cur = std::move(queue.front());
      queue.pop_front();
      const std::size_t d = dist.at(cur);
      for (const auto& n : neighbors(cur)) {
        if (dist.emplace(n, d + 1).second) queue.push_back(n);
      }
    }
    return dist;
  }

  /// Induced subgraph over `keep`.
  OverlayGraph restricted_to(const std::set<ActorId>& keep) const {
    OverlayGraph g;
    for (const auto& n : keep) g.add_node(n);
    for (const auto& [n, adj] : adjacency_) {
      if (!keep.contains(n)) continue;
      for (const auto& m : adj) {
        if (keep.contains(m)) g.add_edge(n, m);
      }
    }
    return g;
  }

 private:
  std::map<ActorId, std::set<ActorId>> adjacency_;
};

/// Views for a star: every client's active view is {server}, the server's
/// is all clients. Clients never link to each other.
inline std::vector<MembershipView> star_views(const ActorId& server,
                                              const std::set<ActorId>& clients) {
  if (clients.empty()) throw std::invalid_argument("build_star: no clients");
  if (clients.contains(server)) {
    throw std::invalid_argument("build_star: server listed as a client");
  }
  std::vector<MembershipView> views;
  MembershipView hub(server);
  hub.active = clients;
  views.push_back(std::move(hub));
  for (const auto& c : clients) {
    MembershipView v(c);
    v.active.insert(server);
    views.push_back(std::move(v));
  }
  return views;
}

inline OverlayGraph build_star(const ActorId& server, const std::set<ActorId>& clients) {
  return OverlayGraph::from_views(star_views(server, clients));
}

/// True iff the graph induced on `expected` is connected and contains every
/// expected node.
template <typename Views>
bool is_single_component(const Views& views, const std::set<ActorId>& expected) {
  if (expected.empty()) return true;
  std::set<ActorId> owners;
  for (const MembershipView& v : views) owners.insert(v.owner);
  if (!std::includes(owners.begin(), owners.end(), expected.begin(), expected.end())) {
    return false;
  }
  const auto g = OverlayGraph::from_views(views).restricted_to(expected);
  return g.distances_from(*expected.begin()).size() == expected.size();
}

/// Exact diameter by breadth-first search from every node.
inline std::size_t diameter(const OverlayGraph& g) {
  if (g.node_count() == 0) return 0;
  std::size_t best = 0;
  for (const auto& n : g.nodes()) {
    const auto dist = g.distances_from(n);
    if (dist.size() != g.node_count()) {
      throw std::domain_error("diameter: graph is disconnected");
    }
    for (const auto& [m, d] : dist) best = std::max(best, d);
  }
  return best;
}

}  // namespace lasp::overlay

#endif  // LASP_OVERLAY_GRAPH_HPP_
