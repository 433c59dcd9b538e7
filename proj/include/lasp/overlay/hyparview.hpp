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

#ifndef LASP_OVERLAY_HYPARVIEW_HPP_
#define LASP_OVERLAY_HYPARVIEW_HPP_

// Partial-view membership in the style of HyParView: a small symmetric
// active view used for dissemination and a larger passive view used to
// repair it. Handlers are pure: they take a view and return the new view
// plus the messages to send.

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "lasp/encoding.hpp"
#include "lasp/overlay/membership.hpp"
#include "lasp/rng.hpp"

namespace lasp::overlay {

struct HpvParams {
  std::size_t active_max = 5;
  std::size_t passive_max = 30;
  std::uint32_t active_random_walk_length = 6;
  std::uint32_t passive_random_walk_length = 3;
  std::uint64_t shuffle_interval_ticks = 10;
  std::size_t shuffle_active_sample = 3;
  std::size_t shuffle_passive_sample = 4;

  void validate() const {
    if (active_max == 0 || passive_max == 0 || active_random_walk_length == 0 ||
        passive_random_walk_length == 0 || shuffle_interval_ticks == 0 ||
        shuffle_active_sample == 0 || shuffle_passive_sample == 0) {
      throw std::invalid_argument("hyparview parameters must all be positive");
    }
    if (passive_random_walk_length > active_random_walk_length) {
      throw std::invalid_argument("hyparview: PRWL must not exceed ARWL");
    }
  }
};

enum class Priority : std::uint8_t { low = 0, high = 1 };

struct Join {};
struct ForwardJoin {
  ActorId joiner;
  std::uint32_t ttl = 0;
};
struct Neighbor {
  Priority priority = Priority::low;
};
struct NeighborReply {
  bool accepted = false;
};
struct Disconnect {};
struct Shuffle {
  ActorId origin;
  std::uint32_t ttl = 0;
  std::vector<ActorId> sample;
};
struct ShuffleReply {
  std::vector<ActorId> sample;
};

using Message =
    std::variant<Join, ForwardJoin, Neighbor, NeighborReply, Disconnect, Shuffle, ShuffleReply>;

inline std::string_view message_name(const Message& m) {
  static constexpr std::string_view kNames[] = {
      "join", "forward_join", "neighbor", "neighbor_reply",
      "disconnect", "shuffle", "shuffle_reply"};
  return kNames[m.index()];
}

struct Envelope {
  ActorId from;
  ActorId to;
  Message message;

  /// Wire body: 1-byte message tag plus fields. Endpoints are implied by
  /// the connection and not encoded.
  template <codec::ByteSink S>
  void encode(S& sink) const {
    sink.u8(static_cast<std::uint8_t>(message.index() + 1));
    auto ids = [&](const std::vector<ActorId>& v) {
      sink.u32(codec::ByteWriter::checked_length(v.size()));
      for (const auto& id : v) id.encode(sink);
    };
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ForwardJoin>) {
            m.joiner.encode(sink);
            sink.u32(m.ttl);
          } else if constexpr (std::is_same_v<T, Neighbor>) {
            sink.u8(static_cast<std::uint8_t>(m.priority));
          } else if constexpr (std::is_same_v<T, NeighborReply>) {
            sink.u8(m.accepted ? 1 : 0);
          } else if constexpr (std::is_same_v<T, Shuffle>) {
            m.origin.encode(sink);
            sink.u32(m.ttl);
            ids(m.sample);
          } else if constexpr (std::is_same_v<T, ShuffleReply>) {
            ids(m.sample);
          }
        },
        message);
  }
};

struct HandleResult {
  MembershipView view;
  std::vector<Envelope> out;
};

namespace detail {

inline ActorId pick_excluding(const std::set<ActorId>& from,
                              const std::set<ActorId>& exclude, Rng& rng,
                              bool* found) {
  std::vector<ActorId> candidates;
  for (const auto& p : from) {
    if (!exclude.contains(p)) candidates.push_back(p);
  }
  *found = !candidates.empty();
  return *found ? rng.pick(candidates) : ActorId{};
}

inline void add_passive(MembershipView& v, const ActorId& p, const HpvParams& params,
                        Rng& rng) {
  if (p == v.owner || v.active.contains(p) || v.passive.contains(p)) return;
  if (v.passive.size() >= params.passive_max) {
    const ActorId victim = rng.pick(v.passive);
    v.passive.erase(victim);
  }
  v.passive.insert(p);
}

inline void add_active(MembershipView& v, const ActorId& p, const HpvParams& params,
                       Rng& rng, std::vector<Envelope>& out) {
  if (p == v.owner || v.active.contains(p)) return;
  v.passive.erase(p);
  if (v.active.size() >= params.active_max) {
    const ActorId evicted = rng.pick(v.active);
    v.active.erase(evicted);
    out.push_back(Envelope{v.owner, evicted, Disconnect{}});
    add_passive(v, evicted, params, rng);
  }
  v.active.insert(p);
}

inline void request_neighbor(MembershipView& v, const std::set<ActorId>& exclude,
                             Rng& rng, std::vector<Envelope>& out) {
  bool found = false;
  ActorId target = pick_excluding(v.passive, exclude, rng, &found);
  if (!found) return;
  const Priority prio = v.active.empty() ? Priority::high : Priority::low;
  out.push_back(Envelope{v.owner, target, Neighbor{prio}});
}

inline void integrate_sample(MembershipView& v, const std::vector<ActorId>& sample,
                             const HpvParams& params, Rng& rng) {
  for (const auto& p : sample) add_passive(v, p, params, rng);
}

}  // namespace detail

/// Applies one incoming membership message to `view`.
inline HandleResult hpv_handle(const MembershipView& view, const Envelope& in,
                               const HpvParams& params, Rng& rng) {
  HandleResult r{view, {}};
  MembershipView& v = r.view;
  const ActorId& sender = in.from;

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Join>) {
          if (sender == v.owner) return;
          detail::add_active(v, sender, params, rng, r.out);
          r.out.push_back(Envelope{v.owner, sender, Neighbor{Priority::high}});
          for (const auto& p : v.active) {
            if (p == sender) continue;
            r.out.push_back(
                Envelope{v.owner, p, ForwardJoin{sender, params.active_random_walk_length}});
          }
        } else if constexpr (std::is_same_v<T, ForwardJoin>) {
          if (m.joiner == v.owner) return;
          auto accept = [&] {
            if (v.active.contains(m.joiner)) return;
            detail::add_active(v, m.joiner, params, rng, r.out);
            r.out.push_back(Envelope{v.owner, m.joiner, Neighbor{Priority::high}});
          };
          if (m.ttl == 0 || v.active.size() <= 1) {
            accept();
            return;
          }
          if (m.ttl == params.passive_random_walk_length) {
            detail::add_passive(v, m.joiner, params, rng);
          }
          bool found = false;
          ActorId next = detail::pick_excluding(v.active, {sender, m.joiner}, rng, &found);
          if (!found) {
            accept();
            return;
          }
          r.out.push_back(Envelope{v.owner, next, ForwardJoin{m.joiner, m.ttl - 1}});
        } else if constexpr (std::is_same_v<T, Neighbor>) {
          if (sender == v.owner) return;
          const bool accept = v.active.contains(sender) || m.priority == Priority::high ||
                              v.active.size() < params.active_max;
          if (accept) detail::add_active(v, sender, params, rng, r.out);
          r.out.push_back(Envelope{v.owner, sender, NeighborReply{accept}});
        } else if constexpr (std::is_same_v<T, NeighborReply>) {
          if (m.accepted) detail::add_active(v, sender, params, rng, r.out);
        } else if constexpr (std::is_same_v<T, Disconnect>) {
          if (v.active.erase(sender) > 0) {
            detail::add_passive(v, sender, params, rng);
            // Left with nobody: ask for a replacement right away rather than
            // waiting for the next periodic round.
            if (v.active.empty()) detail::request_neighbor(v, {sender}, rng, r.out);
          }
        } else if constexpr (std::is_same_v<T, Shuffle>) {
          if (m.origin == v.owner) return;
          if (m.ttl > 0 && v.active.size() > 1) {
            bool found = false;
            ActorId next = detail::pick_excluding(v.active, {sender, m.origin}, rng, &found);
            if (found) {
              r.out.push_back(Envelope{v.owner, next, Shuffle{m.origin, m.ttl - 1, m.sample}});
              return;
            }
          }
          std::vector<ActorId> pool;
          for (const auto& p : v.passive) {
            if (p != m.origin) pool.push_back(p);
          }
          rng.shuffle(pool);
          if (pool.size() > m.sample.size()) pool.resize(m.sample.size());
          r.out.push_back(Envelope{v.owner, m.origin, ShuffleReply{std::move(pool)}});
          detail::integrate_sample(v, m.sample, params, rng);
        } else if constexpr (std::is_same_v<T, ShuffleReply>) {
          detail::integrate_sample(v, m.sample, params, rng);
        }
      },
      in.message);
  return r;
}

/// Reacts to a dropped connection with an active peer: removes it and asks a
/// random passive peer to take its place. No-op if `failed` is not active.
inline HandleResult hpv_on_failure(const MembershipView& view, const ActorId& failed,
                                   const HpvParams& /*params*/, Rng& rng) {
  HandleResult r{view, {}};
  if (r.view.active.erase(failed) == 0) return r;
  r.view.passive.erase(failed);
  detail::request_neighbor(r.view, {}, rng, r.out);
  return r;
}

/// A message to `peer` could not be delivered. Active peers are handled as
/// failures; passive ones are dropped and, if the active view has room,
/// another passive peer is tried.
inline HandleResult hpv_on_unreachable(const MembershipView& view, const ActorId& peer,
                                       const HpvParams& params, Rng& rng) {
  if (view.active.contains(peer)) return hpv_on_failure(view, peer, params, rng);
  HandleResult r{view, {}};
  if (r.view.passive.erase(peer) == 0) return r;
  if (r.view.active.size() < params.active_max) {
    detail::request_neighbor(r.view, {}, rng, r.out);
  }
  return r;
}

/// Periodic round: starts a shuffle walk and, if the active view has room,
/// asks one passive peer to become active. An isolated node only does the
/// latter.
inline HandleResult hpv_shuffle(const MembershipView& view, const HpvParams& params,
                                Rng& rng) {
  HandleResult r{view, {}};
  const MembershipView& v = r.view;
  if (v.active.empty()) {
    detail::request_neighbor(r.view, {}, rng, r.out);
    return r;
  }

  std::vector<ActorId> actives(v.active.begin(), v.active.end());
  std::vector<ActorId> passives(v.passive.begin(), v.passive.end());
  rng.shuffle(actives);
  rng.shuffle(passives);
  const ActorId target = actives.front();
  std::vector<ActorId> sample{v.owner};
  for (std::size_t i = 1; i < actives.size() && i <= params.shuffle_active_sample; ++i) {
    sample.push_back(actives[i]);
  }
  for (std::size_t i = 0; i < passives.size() && i < params.shuffle_passive_sample; ++i) {
    sample.push_back(passives[i]);
  }
  r.out.push_back(
      Envelope{v.owner, target, Shuffle{v.owner, params.active_random_walk_length, sample}});

  if (v.active.size() < params.active_max) {
    detail::request_neighbor(r.view, {}, rng, r.out);
  }
  return r;
}

/// If the node has no active peers, emits a join to a random member of
/// `directory` (an external registry of live nodes).
inline std::vector<Envelope> rejoin_if_isolated(const MembershipView& view,
                                                const std::set<ActorId>& directory,
                                                Rng& rng) {
  if (!view.active.empty()) return {};
  bool found = false;
  ActorId contact = detail::pick_excluding(directory, {view.owner}, rng, &found);
  if (!found) {
    throw std::runtime_error("rejoin_if_isolated: directory has no other members");
  }
  return {Envelope{view.owner, contact, Join{}}};
}

}  // namespace lasp::overlay

#endif  // LASP_OVERLAY_HYPARVIEW_HPP_
