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

#ifndef LASP_ELEMENT_HPP_
#define LASP_ELEMENT_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "lasp/encoding.hpp"

namespace lasp {

namespace detail {

// Order of two length-prefixed strings by their encoded bytes: shorter first,
// then bytewise.
inline std::strong_ordering shortlex(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return a.size() <=> b.size();
  const int c = a.compare(b);
  return c < 0 ? std::strong_ordering::less
               : (c > 0 ? std::strong_ordering::greater
                        : std::strong_ordering::equal);
}

}  // namespace detail

/// Opaque node identifier. One per live process in an experiment.
class ActorId {
 public:
  ActorId() = default;
  explicit ActorId(std::string id) : id_(std::move(id)) {}

  const std::string& str() const { return id_; }
  bool empty() const { return id_.empty(); }

  template <codec::ByteSink S>
  void encode(S& sink) const {
    sink.str(id_);
  }

  friend bool operator==(const ActorId&, const ActorId&) = default;
  friend std::strong_ordering operator<=>(const ActorId& a, const ActorId& b) {
    return detail::shortlex(a.id_, b.id_);
  }

  friend std::ostream& operator<<(std::ostream& os, const ActorId& a) {
    return os << a.id_;
  }

 private:
  std::string id_;
};

/// Set / map element: an integer, a string, or a tuple of elements.
///
/// Ordering is the lexicographic order of the canonical encodings. Because
/// every encoding is self-delimiting, comparing tuples element by element
/// gives the same answer as comparing their concatenated bytes.
class Element {
 public:
  using Tuple = std::vector<Element>;

  enum class Kind : std::uint8_t { integer = 1, string = 2, tuple = 3 };

  Element() : value_(std::int64_t{0}) {}
  Element(std::int64_t v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  Element(int v) : value_(std::int64_t{v}) {}  // NOLINT
  Element(std::string v) : value_(std::move(v)) {}  // NOLINT
  Element(const char* v) : value_(std::string(v)) {}  // NOLINT
  Element(Tuple v) : value_(std::move(v)) {}  // NOLINT

  static Element tuple(std::initializer_list<Element> items) {
    return Element(Tuple(items));
  }

  Kind kind() const { return static_cast<Kind>(value_.index() + 1); }
  bool is_int() const { return kind() == Kind::integer; }
  bool is_string() const { return kind() == Kind::string; }
  bool is_tuple() const { return kind() == Kind::tuple; }

  std::int64_t as_int() const { return std::get<std::int64_t>(value_); }
  const std::string& as_string() const { return std::get<std::string>(value_); }
  const Tuple& as_tuple() const { return std::get<Tuple>(value_); }

  template <codec::ByteSink S>
  void encode(S& sink) const {
    sink.u8(static_cast<std::uint8_t>(kind()));
    switch (kind()) {
      case Kind::integer:
        sink.u64(static_cast<std::uint64_t>(as_int()));
        break;
      case Kind::string:
        sink.str(as_string());
        break;
      case Kind::tuple:
        sink.u32(codec::ByteWriter::checked_length(as_tuple().size()));
        for (const auto& item : as_tuple()) item.encode(sink);
        break;
    }
  }

  friend bool operator==(const Element& a, const Element& b) {
    return a.value_ == b.value_;
  }

  friend std::strong_ordering operator<=>(const Element& a, const Element& b) {
    if (a.kind() != b.kind()) return a.kind() <=> b.kind();
    switch (a.kind()) {
      case Kind::integer:
        // Big-endian two's complement bytes compare as unsigned.
        return static_cast<std::uint64_t>(a.as_int()) <=>
               static_cast<std::uint64_t>(b.as_int());
      case Kind::string:
        return detail::shortlex(a.as_string(), b.as_string());
      case Kind::tuple: {
        const auto& x = a.as_tuple();
        const auto& y = b.as_tuple();
        if (x.size() != y.size()) return x.size() <=> y.size();
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (auto c = x[i] <=> y[i]; c != 0) return c;
        }
        return std::strong_ordering::equal;
      }
    }
    return std::strong_ordering::equal;
  }

  friend std::ostream& operator<<(std::ostream& os, const Element& e) {
    switch (e.kind()) {
      case Kind::integer:
        return os << e.as_int();
      case Kind::string:
        return os << '"' << e.as_string() << '"';
      case Kind::tuple: {
        os << '(';
        const char* sep = "";
        for (const auto& item : e.as_tuple()) {
          os << sep << item;
          sep = ", ";
        }
        return os << ')';
      }
    }
    return os;
  }

 private:
  std::variant<std::int64_t, std::string, Tuple> value_;
};

}  // namespace lasp

template <>
struct std::hash<lasp::ActorId> {
  std::size_t operator()(const lasp::ActorId& a) const noexcept {
    return std::hash<std::string>{}(a.str());
  }
};

#endif  // LASP_ELEMENT_HPP_
