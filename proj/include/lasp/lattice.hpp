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

#ifndef LASP_LATTICE_HPP_
#define LASP_LATTICE_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>

#include "lasp/awset.hpp"
#include "lasp/encoding.hpp"
#include "lasp/gcounter.hpp"
#include "lasp/gmap.hpp"
#include "lasp/wcrdt.hpp"

namespace lasp {

/// Variant tag, also the first byte of every encoded state.
enum class Variant : std::uint8_t {
  gcounter = 1,
  awset = 2,
  gmap = 3,
  pair = 4,
  wcrdt = 5,
};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::gcounter: return "gcounter";
    case Variant::awset: return "awset";
    case Variant::gmap: return "gmap";
    case Variant::pair: return "pair";
    case Variant::wcrdt: return "wcrdt";
  }
  return "?";
}

/// Thrown when two states of different shape are joined. This is a
/// programming error, never a data condition.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class LatticeState;

/// Recursive product of two lattices; join is componentwise.
class PairState {
 public:
  PairState(LatticeState first, LatticeState second);

  const LatticeState& first() const { return *first_; }
  const LatticeState& second() const { return *second_; }

  friend bool operator==(const PairState& a, const PairState& b);

 private:
  std::shared_ptr<const LatticeState> first_;
  std::shared_ptr<const LatticeState> second_;
};

/// Tagged union of every CRDT state the runtime replicates.
class LatticeState {
 public:
  using Storage = std::variant<GCounter, AWSet, GMap, PairState, WCRDT>;

  LatticeState() : value_(GCounter{}) {}
  LatticeState(GCounter v) : value_(std::move(v)) {}  // NOLINT
  LatticeState(AWSet v) : value_(std::move(v)) {}     // NOLINT
  LatticeState(GMap v) : value_(std::move(v)) {}      // NOLINT
  LatticeState(PairState v) : value_(std::move(v)) {} // NOLINT
  LatticeState(WCRDT v) : value_(std::move(v)) {}     // NOLINT

  Variant variant() const { return static_cast<Variant>(value_.index() + 1); }

  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(value_);
  }

  template <typename T>
  const T& as() const {
    if (const T* p = std::get_if<T>(&value_)) return *p;
    throw StructuralError("lattice state is " + std::string(to_string(variant())));
  }

  const Storage& storage() const { return value_; }

  template <codec::ByteSink S>
  void encode(S& sink) const;

  friend bool operator==(const LatticeState& a, const LatticeState& b) {
    return a.value_ == b.value_;
  }

 private:
  Storage value_;
};

/// A state fragment describing only what a mutation changed. Same shape as
/// the state it applies to.
using Delta = LatticeState;

inline PairState::PairState(LatticeState first, LatticeState second)
    : first_(std::make_shared<const LatticeState>(std::move(first))),
      second_(std::make_shared<const LatticeState>(std::move(second))) {}

inline bool operator==(const PairState& a, const PairState& b) {
  return *a.first_ == *b.first_ && *a.second_ == *b.second_;
}

template <codec::ByteSink S>
void LatticeState::encode(S& sink) const {
  sink.u8(static_cast<std::uint8_t>(variant()));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PairState>) {
          v.first().encode(sink);
          v.second().encode(sink);
        } else {
          v.encode(sink);
        }
      },
      value_);
}

/// Least upper bound. Throws StructuralError on shape mismatch.
inline LatticeState join(const LatticeState& a, const LatticeState& b) {
  if (a.variant() != b.variant()) {
    throw StructuralError("join: " + std::string(to_string(a.variant())) +
                          " vs " + std::string(to_string(b.variant())));
  }
  return std::visit(
      [&](const auto& x) -> LatticeState {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.storage());
        if constexpr (std::is_same_v<T, PairState>) {
          return PairState(join(x.first(), y.first()),
                           join(x.second(), y.second()));
        } else {
          return join(x, y);
        }
      },
      a.storage());
}

/// True iff `b` <= `a`, i.e. joining `b` into `a` changes nothing.
inline bool includes(const LatticeState& a, const LatticeState& b) {
  if (a.variant() != b.variant()) {
    throw StructuralError("includes: variant mismatch");
  }
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.storage());
        if constexpr (std::is_same_v<T, PairState>) {
          return includes(x.first(), y.first()) &&
                 includes(x.second(), y.second());
        } else {
          return x.includes(y);
        }
      },
      a.storage());
}

/// Bottom element with the same shape as `s` (same Pair nesting, same
/// W-CRDT task count).
inline LatticeState bottom_like(const LatticeState& s) {
  return std::visit(
      [](const auto& x) -> LatticeState {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, PairState>) {
          return PairState(bottom_like(x.first()), bottom_like(x.second()));
        } else if constexpr (std::is_same_v<T, WCRDT>) {
          return WCRDT(x.task_count());
        } else {
          return T{};
        }
      },
      s.storage());
}

/// True iff the two states can be joined.
inline bool same_shape(const LatticeState& a, const LatticeState& b) {
  if (a.variant() != b.variant()) return false;
  if (a.is<PairState>()) {
    const auto& x = a.as<PairState>();
    const auto& y = b.as<PairState>();
    return same_shape(x.first(), y.first()) && same_shape(x.second(), y.second());
  }
  if (a.is<WCRDT>()) {
    return a.as<WCRDT>().task_count() == b.as<WCRDT>().task_count();
  }
  return true;
}

inline std::size_t encoded_size(const LatticeState& s) {
  return codec::encoded_size(s);
}

/// A mutation applied to a whole LatticeState: returns new state and delta.
using Mutator = std::function<Mutated<LatticeState>(const LatticeState&)>;

namespace mutators {

template <typename T>
Mutated<LatticeState> lift(Mutated<T> m) {
  return {LatticeState(std::move(m.state)), LatticeState(std::move(m.delta))};
}

inline Mutator increment(ActorId actor, std::uint64_t amount = 1) {
  return [actor = std::move(actor), amount](const LatticeState& s) {
    return lift(s.as<GCounter>().increment(actor, amount));
  };
}

inline Mutator add(ActorId actor, Element e) {
  return [actor = std::move(actor), e = std::move(e)](const LatticeState& s) {
    return lift(s.as<AWSet>().add(actor, e));
  };
}

inline Mutator remove(Element e) {
  return [e = std::move(e)](const LatticeState& s) {
    return lift(s.as<AWSet>().remove(e));
  };
}

inline Mutator set_true(ActorId key) {
  return [key = std::move(key)](const LatticeState& s) {
    return lift(s.as<GMap>().set_true(key));
  };
}

}  // namespace mutators

}  // namespace lasp

#endif  // LASP_LATTICE_HPP_
