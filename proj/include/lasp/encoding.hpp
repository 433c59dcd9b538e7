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

#ifndef LASP_ENCODING_HPP_
#define LASP_ENCODING_HPP_

// Canonical byte encoding. Values are never shipped as bytes inside the
// simulator; the encoding exists to give every payload a deterministic size
// and every identifier a deterministic order.
//
//   integers           8-byte big-endian
//   counts / lengths   4-byte big-endian
//   strings            length-prefixed UTF-8
//   mappings, sets     count, then entries sorted by their encoded bytes

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lasp::codec {

template <typename S>
concept ByteSink = requires(S& sink, std::uint8_t byte, std::uint32_t n32,
                            std::uint64_t n64, std::string_view text) {
  sink.u8(byte);
  sink.u32(n32);
  sink.u64(n64);
  sink.str(text);
};

/// Appends the canonical bytes to an owned buffer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }

  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
      bytes_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      bytes_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  void str(std::string_view s) {
    u32(checked_length(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  const std::vector<std::uint8_t>& bytes() const& { return bytes_; }
  std::vector<std::uint8_t> bytes() && { return std::move(bytes_); }

  static std::uint32_t checked_length(std::size_t n) {
    if (n > std::numeric_limits<std::uint32_t>::max()) {
      throw std::length_error("canonical encoding: length exceeds 32 bits");
    }
    return static_cast<std::uint32_t>(n);
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Counts the bytes ByteWriter would produce without materializing them.
class SizeCounter {
 public:
  void u8(std::uint8_t) { size_ += 1; }
  void u32(std::uint32_t) { size_ += 4; }
  void u64(std::uint64_t) { size_ += 8; }
  void str(std::string_view s) { size_ += 4 + s.size(); }

  std::size_t size() const { return size_; }

 private:
  std::size_t size_ = 0;
};

template <typename T>
concept Encodable = requires(const T& value, ByteWriter& w, SizeCounter& c) {
  value.encode(w);
  value.encode(c);
};

template <Encodable T>
std::size_t encoded_size(const T& value) {
  SizeCounter counter;
  value.encode(counter);
  return counter.size();
}

template <Encodable T>
std::vector<std::uint8_t> encode(const T& value) {
  ByteWriter writer;
  value.encode(writer);
  return std::move(writer).bytes();
}

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a, usable incrementally by passing the previous hash back in.
inline std::uint64_t fnv1a(std::string_view data,
                           std::uint64_t hash = kFnvOffset) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hash;
}

inline std::uint64_t fnv1a(const std::vector<std::uint8_t>& data,
                           std::uint64_t hash = kFnvOffset) {
  for (std::uint8_t c : data) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hash;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace lasp::codec

#endif  // LASP_ENCODING_HPP_
