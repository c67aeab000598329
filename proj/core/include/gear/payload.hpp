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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace gear {

// Synthetic block contents. The first eight bytes hold the stamp; the rest is
// a splitmix64 stream keyed by (stamp, column), so a reader can check a block
// without knowing what was written.
void fill_pattern(std::span<std::byte> block, std::uint64_t stamp, std::uint32_t column);

// Stamp of an intact block, nullopt if any byte disagrees with the pattern.
// Blocks shorter than eight bytes carry a truncated stamp and always pass.
std::optional<std::uint64_t> verify_pattern(std::span<const std::byte> block, std::uint32_t column);

// 64-bit FNV-1a.
std::uint64_t block_checksum(std::span<const std::byte> block) noexcept;

}  // namespace gear
