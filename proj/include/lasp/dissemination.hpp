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

#ifndef LASP_DISSEMINATION_HPP_
#define LASP_DISSEMINATION_HPP_

// Anti-entropy between overlay neighbours. State mode ships every source
// variable to every active peer each interval. Delta mode keeps a per-variable
// log of deltas (local and relayed), ships each peer the join of what it has
// not acknowledged, and falls back to the full state when the log no longer
// covers the gap.

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "lasp/dataflow.hpp"
#include "lasp/encoding.hpp"
#include "lasp/lattice.hpp"
#include "lasp/overlay/hyparview.hpp"

namespace lasp::dissemination {

using dataflow::VariableId;
using StatePtr = std::shared_ptr<const LatticeState>;

enum class Mode { state, delta };

inline std::string_view to_string(Mode m) { return m == Mode::state ? "state" : "delta"; }

enum class PayloadKind : std::uint8_t {
  full_state = 1,
  delta_group = 2,
  ack = 3,
  membership_control = 4,
};

inline std::string_view to_string(PayloadKind k) {
  switch (k) {
    case PayloadKind::full_state: return "full_state";
    case PayloadKind::delta_group: return "delta_group";
    case PayloadKind::ack: return "ack";
    case PayloadKind::membership_control: return "membership_control";
  }
  return "?";
}

/// One message between two nodes. `bytes` is the canonical encoded size and
/// is filled in by the factory functions.
struct Payload {
  PayloadKind kind = PayloadKind::ack;
  ActorId sender;
  ActorId receiver;
  VariableId variable;
  StatePtr body;
  std::uint64_t from = 0;  // delta_group: exclusive lower bound of the range
  std::uint64_t seq = 0;   // upper bound of the range, or the acked sequence
  overlay::Message control;
  bool instrumented = false;
  std::size_t bytes = 0;

  static Payload full_state(ActorId sender, ActorId receiver, VariableId var, StatePtr body,
                            std::uint64_t seq, bool instrumented, std::size_t body_size) {
    Payload p{PayloadKind::full_state, std::move(sender), std::move(receiver),
              std::move(var), std::move(body), 0, seq, {}, instrumented, 0};
    p.bytes = header_size(p) + 8 + body_size;
    return p;
  }

  static Payload delta_group(ActorId sender, ActorId receiver, VariableId var, StatePtr body,
                             std::uint64_t from, std::uint64_t seq, bool instrumented) {
    const std::size_t body_size = encoded_size(*body);
    Payload p{PayloadKind::delta_group, std::move(sender), std::move(receiver),
              std::move(var), std::move(body), from, seq, {}, instrumented, 0};
    p.bytes = header_size(p) + 16 + body_size;
    return p;
  }

  static Payload ack(ActorId sender, ActorId receiver, VariableId var, std::uint64_t seq,
                     bool instrumented) {
    Payload p{PayloadKind::ack, std::move(sender), std::move(receiver), std::move(var),
              nullptr, 0, seq, {}, instrumented, 0};
    p.bytes = header_size(p) + 8;
    return p;
  }

  static Payload membership(const overlay::Envelope& e) {
    Payload p{PayloadKind::membership_control, e.from, e.to, {}, nullptr, 0, 0,
              e.message, false, 0};
    p.bytes = 1 + codec::encoded_size(e);
    return p;
  }

  overlay::Envelope envelope() const { return {sender, receiver, control}; }

  /// Payload-type tag, then the body. Membership bodies are the control
  /// message; data bodies carry the variable id, sequence numbers and state.
  template <codec::ByteSink S>
  void encode(S& sink) const {
    sink.u8(static_cast<std::uint8_t>(kind));
    if (kind == PayloadKind::membership_control) {
      envelope().encode(sink);
      return;
    }
    sink.str(variable);
    if (kind == PayloadKind::delta_group) sink.u64(from);
    sink.u64(seq);
    if (body) body->encode(sink);
  }

 private:
  static std::size_t header_size(const Payload& p) { return 1 + 4 + p.variable.size(); }
};

/// Per-variable log of deltas awaiting acknowledgement by neighbours.
class DeltaBuffer {
 public:
  struct Entry {
    std::uint64_t seq;
    StatePtr delta;
    ActorId origin;  // node the delta came from; never echoed back to it
  };

  std::uint64_t append(StatePtr delta, ActorId origin) {
    entries_.push_back(Entry{++last_, std::move(delta), std::move(origin)});
    return last_;
  }

  /// Highest sequence number issued.
  std::uint64_t last() const { return last_; }
  /// Highest sequence number discarded by compaction.
  std::uint64_t floor() const { return floor_; }
  std::size_t size() const { return entries_.size(); }
  const std::deque<Entry>& entries() const { return entries_; }

  bool knows(const ActorId& peer) const { return acked_.contains(peer); }
  void track(const ActorId& peer) { acked_.try_emplace(peer, 0); }

  std::uint64_t acked(const ActorId& peer) const {
    auto it = acked_.find(peer);
    return it == acked_.end() ? 0 : it->second;
  }

  /// Raises the peer's acknowledged sequence; never lowers it. Returns true
  /// if it moved.
  bool ack(const ActorId& peer, std::uint64_t seq) {
    auto& a = acked_[peer];
    if (seq <= a) return false;
    a = std::min(seq, last_);
    return true;
  }

  /// True iff entries the peer still needs have been discarded.
  bool needs_full_state(const ActorId& peer) const { return acked(peer) < floor_; }

  /// Join of the entries above the peer's ack that it did not send us, or
  /// nullopt if there are none.
  std::optional<LatticeState> group_for(const ActorId& peer) const {
    const std::uint64_t a = acked(peer);
    std::optional<LatticeState> out;
    for (auto it = entries_.rbegin(); it != entries_.rend() && it->seq > a; ++it) {
      if (it->origin == peer) continue;
      out = out ? join(*out, *it->delta) : *it->delta;
    }
    return out;
  }

  /// Drops entries acknowledged by every peer in `peers` (all entries when
  /// there are none).
  void compact(const std::set<ActorId>& peers) {
    std::uint64_t low = last_;
    for (const auto& p : peers) low = std::min(low, acked(p));
    while (!entries_.empty() && entries_.front().seq <= low) {
      floor_ = entries_.front().seq;
      entries_.pop_front();
    }
  }

 private:
  std::deque<Entry> entries_;
  std::map<ActorId, std::uint64_t> acked_;
  std::uint64_t last_ = 0;
  std::uint64_t floor_ = 0;
};

/// Dissemination state of one node. Not thread-safe; owned by the node.
class Disseminator {
 public:
  Disseminator(ActorId self, Mode mode, std::set<VariableId> uninstrumented = {},
               std::uint32_t fallback_intervals = 3)
      : self_(std::move(self)),
        mode_(mode),
        uninstrumented_(std::move(uninstrumented)),
        fallback_intervals_(fallback_intervals) {
    if (fallback_intervals_ == 0) {
      throw std::invalid_argument("fallback interval count must be positive");
    }
  }

  const ActorId& self() const { return self_; }
  Mode mode() const { return mode_; }

  bool instrumented(const VariableId& var) const { return !uninstrumented_.contains(var); }

  /// Moves the store's pending local deltas into the buffers. In state mode
  /// they are simply discarded.
  void absorb_local(dataflow::Store& store) {
    for (auto& [var, delta] : store.take_local_deltas()) {
      if (mode_ == Mode::delta) {
        buffers_[var].append(std::make_shared<const LatticeState>(std::move(delta)), self_);
      }
    }
  }

  /// One propagation round towards `peers`.
  std::vector<Payload> propagate(const dataflow::Store& store, const std::set<ActorId>& peers) {
    peers_ = peers;
    std::vector<Payload> out;
    if (peers.empty() && mode_ == Mode::state) return out;
    if (mode_ == Mode::state) {
      for (const auto& var : store.sources()) {
        auto body = store.state_ptr(var);
        const std::size_t size = encoded_size(*body);
        for (const auto& p : peers) {
          out.push_back(Payload::full_state(self_, p, var, body, 0, instrumented(var), size));
        }
      }
      return out;
    }

    for (auto& [var, buf] : buffers_) {
      std::optional<std::size_t> full_size;
      for (const auto& p : peers) {
        buf.track(p);
        Link& link = links_[{p, var}];
        const std::uint64_t acked = buf.acked(p);
        link.stalled = acked < link.sent_upto ? link.stalled + 1 : 0;
        if (acked >= buf.last()) continue;

        if (buf.needs_full_state(p) || link.stalled >= fallback_intervals_) {
          auto body = store.state_ptr(var);
          if (!full_size) full_size = encoded_size(*body);
          out.push_back(Payload::full_state(self_, p, var, std::move(body), buf.last(),
                                            instrumented(var), *full_size));
          link.sent_upto = buf.last();
          link.stalled = 0;
          ++fallbacks_;
          continue;
        }
        auto group = buf.group_for(p);
        if (!group) {
          // Only the peer's own deltas are pending; it has them already.
          buf.ack(p, buf.last());
          continue;
        }
        out.push_back(Payload::delta_group(
            self_, p, var, std::make_shared<const LatticeState>(std::move(*group)), acked,
            buf.last(), instrumented(var)));
        link.sent_upto = buf.last();
      }
      buf.compact(peers);
    }
    return out;
  }

  /// Merges a full_state or delta_group into `store`. In delta mode returns
  /// the ack to send back.
  std::optional<Payload> receive(dataflow::Store& store, const Payload& p) {
    if (p.kind != PayloadKind::full_state && p.kind != PayloadKind::delta_group) {
      throw std::invalid_argument("receive: not a data payload");
    }
    const bool grew = store.merge(p.variable, *p.body);
    std::optional<Payload> reply;
    if (mode_ == Mode::delta) {
      // Only deltas that taught us something are worth relaying.
      if (grew) buffers_[p.variable].append(p.body, p.sender);
      // A group covers everything the sender buffered after `from` except
      // what came from us. Anything below `from` that we have not acked is
      // either our own or still in flight on a reliable link, so acking the
      // group's upper end is safe even when `from` is ahead of us.
      std::uint64_t& have = received_[{p.sender, p.variable}];
      have = std::max(have, p.seq);
      reply = Payload::ack(self_, p.sender, p.variable, have, instrumented(p.variable));
    }
    absorb_local(store);
    return reply;
  }

  /// Applies an ack. Returns false (and counts a diagnostic) if we never
  /// sent that variable to the acking node.
  bool receive_ack(const Payload& p) {
    auto it = buffers_.find(p.variable);
    if (it == buffers_.end() || !it->second.knows(p.sender)) {
      ++ignored_acks_;
      return false;
    }
    if (it->second.ack(p.sender, p.seq)) it->second.compact(peers_);
    return true;
  }

  const DeltaBuffer* buffer(const VariableId& var) const {
    auto it = buffers_.find(var);
    return it == buffers_.end() ? nullptr : &it->second;
  }

  std::size_t buffered_entries() const {
    std::size_t n = 0;
    for (const auto& [var, buf] : buffers_) n += buf.size();
    return n;
  }

  std::uint64_t ignored_acks() const { return ignored_acks_; }
  std::uint64_t fallbacks() const { return fallbacks_; }

 private:
  struct Link {
    std::uint64_t sent_upto = 0;
    std::uint32_t stalled = 0;
  };

  ActorId self_;
  Mode mode_;
  std::set<VariableId> uninstrumented_;
  std::uint32_t fallback_intervals_;
  std::set<ActorId> peers_;
  std::map<VariableId, DeltaBuffer> buffers_;
  std::map<std::pair<ActorId, VariableId>, Link> links_;
  std::map<std::pair<ActorId, VariableId>, std::uint64_t> received_;
  std::uint64_t ignored_acks_ = 0;
  std::uint64_t fallbacks_ = 0;
};

}  // namespace lasp::dissemination

#endif  // LASP_DISSEMINATION_HPP_
