/*
 * Copyright 2026 The gear Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <bit>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gear/error.hpp"

// Little-endian encoding helpers shared by the region header, checkpoint,
// dataset and wire formats.
namespace gear::bytes {

template <std::unsigned_integral T>
inline void store_le(std::byte* dst, T value) noexcept {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    dst[i] = static_cast<std::byte>((value >> (8 * i)) & 0xFF);
  }
}

template <std::unsigned_integral T>
inline T load_le(const std::byte* src) noexcept {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(std::to_integer<std::uint8_t>(src[i])) << (8 * i);
  }
  return value;
}

inline void store_f64(std::byte* dst, double value) noexcept {
  store_le(dst, std::bit_cast<std::uint64_t>(value));
}

inline double load_f64(const std::byte* src) noexcept {
  return std::bit_cast<double>(load_le<std::uint64_t>(src));
}

class Writer {
 public:
  explicit Writer(std::vector<std::byte>& out) : out_(out) {}

  template <std::unsigned_integral T>
  Writer& put(T value) {
    const auto at = out_.size();
    out_.resize(at + sizeof(T));
    store_le(out_.data() + at, value);
    return *this;
  }

  Writer& put_f64(double value) { return put(std::bit_cast<std::uint64_t>(value)); }

  Writer& put_bytes(std::span<const std::byte> data) {
    out_.insert(out_.end(), data.begin(), data.end());
    return *this;
  }

  Writer& put_string(std::string_view s) {
    return put_bytes(std::as_bytes(std::span(s.data(), s.size())));
  }

  Writer& pad(std::size_t n) {
    out_.resize(out_.size() + n, std::byte{0});
    return *this;
  }

  std::size_t size() const noexcept { return out_.size(); }

 private:
  std::vector<std::byte>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> data) : data_(data) {}

  template <std::unsigned_integral T>
  T get() {
    require(sizeof(T));
    T value = load_le<T>(data_.data() + pos_);
    pos_ += sizeof(T);
    return value;
  }

  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  std::span<const std::byte> get_bytes(std::size_t n) {
    require(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::string get_string(std::size_t n) {
    auto raw = get_bytes(n);
    return std::string(reinterpret_cast<const char*>(raw.data()), raw.size());
  }

  void skip(std::size_t n) {
    require(n);
    pos_ += n;
  }

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void require(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw Error(Errc::format, "truncated input: need " + std::to_string(n) + " bytes at offset " +
                                    std::to_string(pos_) + ", have " +
                                    std::to_string(data_.size() - pos_));
    }
  }

  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

// 64-bit FNV-1a.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a(std::span<const std::byte> data, std::uint64_t h = kFnvOffset) noexcept {
  for (auto b : data) {
    h ^= std::to_integer<std::uint8_t>(b);
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace gear::bytes
