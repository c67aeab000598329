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
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

// In-region index-manager state: one 32-byte status record per index, and an
// allocator section holding the per-node clock, per-client partitions and
// their free-index queues. Records are accessed through std::atomic_ref so
// every process mapping the region sees coherent values.
namespace gear {

static_assert(std::endian::native == std::endian::little,
              "region layout is little-endian and accessed in place");

enum class IndexState : std::uint8_t { free = 0, writing = 1, committed = 2, evicted = 3 };

const char* state_name(IndexState state) noexcept;

// Total order by (logical_seq, node_id).
struct HybridTimestamp {
  std::uint64_t logical_seq = 0;
  std::uint16_t node_id = 0;

  auto operator<=>(const HybridTimestamp&) const = default;
};

struct IndexStatus {
  IndexState state = IndexState::free;
  double priority = 0.0;
  HybridTimestamp timestamp;
  std::uint64_t epoch = 0;
};

inline constexpr std::size_t kStatusRecordBytes = 32;

// Record layout: state u8 @0, pad u8 @1, node_id u16 @2, pad @4..8,
// priority f64 @8, logical_seq u64 @16, epoch u64 @24.
//
// epoch doubles as a sequence lock: it is odd while a record is being
// rewritten and advances by 2 per published transition, so it strictly
// increases every time an index is re-allocated.
class StatusTable {
 public:
  StatusTable() = default;
  StatusTable(std::byte* base, std::uint64_t capacity) : base_(base), capacity_(capacity) {}

  std::uint64_t capacity() const noexcept { return capacity_; }

  // Untorn read; spins while a writer holds the record.
  IndexStatus read(std::uint64_t index) const;
  IndexState state(std::uint64_t index) const;
  // Stable (even) epoch observed with acquire ordering; spins past writers.
  std::uint64_t stable_epoch(std::uint64_t index) const;
  std::uint64_t raw_epoch(std::uint64_t index) const;

  // Single writer per index (the owning client).
  void publish(std::uint64_t index, IndexState state, double priority, HybridTimestamp ts);

 private:
  std::byte* record(std::uint64_t index) const { return base_ + index * kStatusRecordBytes; }

  std::byte* base_ = nullptr;
  std::uint64_t capacity_ = 0;
};

struct PartitionRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;

  std::uint64_t size() const noexcept { return end - begin; }
  bool contains(std::uint64_t i) const noexcept { return i >= begin && i < end; }
  bool operator==(const PartitionRange&) const = default;
};

enum class Counter : std::uint8_t { commits = 0, evictions = 1, releases = 2 };

// Layout: 64-byte section header {shard_id u32, num_partitions u32, clock u64},
// then one 64-byte record per partition {begin, end, head, count, commits,
// evictions, releases, reserved} (all u64), then capacity u64 queue slots.
// Partition p's ring occupies slots [begin, end).
class AllocatorSection {
 public:
  static constexpr std::size_t kHeaderBytes = 64;
  static constexpr std::size_t kPartitionBytes = 64;

  AllocatorSection() = default;
  AllocatorSection(std::byte* base, std::uint64_t capacity) : base_(base), capacity_(capacity) {}

  static std::size_t bytes(std::uint64_t capacity, std::uint32_t partitions) noexcept {
    return kHeaderBytes + kPartitionBytes * partitions + 8 * capacity;
  }
  // Equal contiguous partitions, each queue seeded in ascending index order.
  static void initialize(std::byte* base, std::uint64_t capacity, std::uint32_t partitions,
                         std::uint32_t shard_id);
  static std::uint32_t read_partition_count(const std::byte* base) noexcept;

  std::uint32_t shard_id() const;
  std::uint32_t partitions() const;
  PartitionRange range(std::uint32_t partition) const;
  std::uint32_t partition_of(std::uint64_t local_index) const;

  // Node-wide hybrid clock.
  std::uint64_t next_logical_seq();
  void observe_logical_seq(std::uint64_t seq);
  std::uint64_t clock() const;

  // Queue operations are single-owner per partition.
  std::uint64_t queue_size(std::uint32_t partition) const;
  std::vector<std::uint64_t> queue_contents(std::uint32_t partition) const;
  std::optional<std::uint64_t> pop(std::uint32_t partition);
  void push(std::uint32_t partition, std::uint64_t local_index);
  void rewrite_queue(std::uint32_t partition, std::span<const std::uint64_t> order);

  void bump(std::uint32_t partition, Counter counter);
  std::uint64_t counter(std::uint32_t partition, Counter counter) const;

 private:
  std::byte* part(std::uint32_t p) const { return base_ + kHeaderBytes + kPartitionBytes * p; }
  std::byte* slots() const;

  std::byte* base_ = nullptr;
  std::uint64_t capacity_ = 0;
};

}  // namespace gear
