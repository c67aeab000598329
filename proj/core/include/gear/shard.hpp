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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gear/region.hpp"
#include "gear/schema.hpp"
#include "gear/status.hpp"

namespace gear {

inline constexpr std::uint32_t kShardMagic = 0x47454152;  // "GEAR"
inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kBlockAlignment = 64;
inline constexpr std::uint64_t kDefaultMemoryBudget = 8ULL << 30;

// "gear.shard.<cluster_id>.<shard_id>"
std::string shard_region_name(std::string_view cluster_id, std::uint32_t shard_id);

enum class Backing { private_memory, shared_region };

struct ShardOptions {
  Backing backing = Backing::private_memory;
  std::string region_name;  // required for Backing::shared_region
  std::uint64_t memory_budget = kDefaultMemoryBudget;
  std::uint32_t partitions = 1;  // one local index manager per partition
};

// Byte offsets of every section inside the region. Everything after the
// header is 64-byte aligned.
struct ShardLayout {
  std::size_t header_bytes = 0;
  std::vector<std::uint64_t> table_offsets;
  std::vector<std::uint64_t> aligned_block_bytes;
  std::uint64_t status_offset = 0;
  std::uint64_t allocator_offset = 0;
  std::uint64_t total_bytes = 0;

  static ShardLayout compute(const TrajectorySchema& schema, std::uint64_t capacity,
                             std::uint32_t partitions);
};

struct ShardHeader {
  std::uint32_t magic = kShardMagic;
  std::uint8_t version = kFormatVersion;
  std::uint64_t schema_hash = 0;
  std::uint64_t capacity = 0;
  std::vector<ColumnSpec> columns;
  std::vector<std::uint64_t> table_offsets;
  std::size_t encoded_bytes = 0;
};

// magic u32, version u8, 3 pad bytes, schema_hash u64, capacity u64,
// num_columns u16, then per column {name_len u8, name, dtype u8, ndim u8,
// extents u32[ndim], table_offset u64}. Little-endian.
void encode_header(bytes::Writer& out, const TrajectorySchema& schema, std::uint64_t capacity,
                   std::span<const std::uint64_t> table_offsets);
// Checks magic, version and that schema_hash matches the decoded columns.
ShardHeader decode_header(std::span<const std::byte> data);

class Shard {
 public:
  Shard(Shard&&) noexcept = default;
  Shard& operator=(Shard&&) noexcept = default;

  static Shard create(const TrajectorySchema& schema, std::uint64_t capacity, std::uint32_t shard_id,
                      const ShardOptions& options = {});
  static Shard open(const std::string& region_name);
  // Also fails unless the stored schema hash equals expected.hash().
  static Shard open(const std::string& region_name, const TrajectorySchema& expected);

  // Refuses while any index is WRITING.
  void checkpoint(const std::filesystem::path& path) const;
  static Shard restore(const std::filesystem::path& path, const ShardOptions& options = {});

  const TrajectorySchema& schema() const noexcept { return schema_; }
  std::uint64_t capacity() const noexcept { return capacity_; }
  std::uint32_t shard_id() const { return allocator().shard_id(); }
  const ShardLayout& layout() const noexcept { return layout_; }
  const std::string& region_name() const noexcept { return region_.name(); }
  Region& region() noexcept { return region_; }

  std::span<std::byte> block(std::size_t column, std::uint64_t local_index);
  std::span<const std::byte> block(std::size_t column, std::uint64_t local_index) const;
  std::span<std::byte> block_view(std::string_view column, std::uint64_t local_index);
  std::span<const std::byte> block_view(std::string_view column, std::uint64_t local_index) const;

  StatusTable status() const { return StatusTable(base() + layout_.status_offset, capacity_); }
  AllocatorSection allocator() const { return AllocatorSection(base() + layout_.allocator_offset, capacity_); }

  bool owns(std::uint64_t global_index) const { return global_index / capacity_ == shard_id(); }
  std::uint64_t to_global(std::uint64_t local_index) const { return shard_id() * capacity_ + local_index; }

  std::span<const std::byte> region_bytes() const noexcept { return region_.bytes(); }

 private:
  Shard(Region region, TrajectorySchema schema, std::uint64_t capacity, ShardLayout layout)
      : region_(std::move(region)), schema_(std::move(schema)), capacity_(capacity), layout_(std::move(layout)) {}

  static Shard from_region(Region region);
  std::byte* base() const { return const_cast<std::byte*>(region_.data()); }
  void check_index(std::size_t column, std::uint64_t local_index) const;

  Region region_;
  TrajectorySchema schema_;
  std::uint64_t capacity_;
  ShardLayout layout_;
};

}  // namespace gear
