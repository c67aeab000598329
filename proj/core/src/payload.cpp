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

#include "gear/payload.hpp"

#include <algorithm>
#include <cstring>

#include "gear/byte_io.hpp"

namespace gear {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t stamp, std::uint32_t column) noexcept {
  return stamp ^ (0xd1b54a32d192ed03ULL * (static_cast<std::uint64_t>(column) + 1));
}

}  // namespace

void fill_pattern(std::span<std::byte> block, std::uint64_t stamp, std::uint32_t column) {
  std::byte word[8];
  bytes::store_le(word, stamp);
  const auto head = std::min<std::size_t>(8, block.size());
  std::memcpy(block.data(), word, head);
  auto state = stream_key(stamp, column);
  for (std::size_t at = head; at < block.size(); at += 8) {
    bytes::store_le(word, splitmix64(state));
    std::memcpy(block.data() + at, word, std::min<std::size_t>(8, block.size() - at));
  }
}

std::optional<std::uint64_t> verify_pattern(std::span<const std::byte> block, std::uint32_t column) {
  if (block.size() < 8) return 0;
  const auto stamp = bytes::load_le<std::uint64_t>(block.data());
  auto state = stream_key(stamp, column);
  std::byte word[8];
  for (std::size_t at = 8; at < block.size(); at += 8) {
    bytes::store_le(word, splitmix64(state));
    if (std::memcmp(block.data() + at, word, std::min<std::size_t>(8, block.size() - at)) != 0) {
      return std::nullopt;
    }
  }
  return stamp;
}

std::uint64_t block_checksum(std::span<const std::byte> block) noexcept { return bytes::fnv1a(block); }

}  // namespace gear
