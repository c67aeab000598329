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
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "gear/shard.hpp"
#include "gear/status.hpp"

namespace gear {

enum class RemovalStrategy : std::uint8_t { fifo = 0, lifo = 1 };

RemovalStrategy parse_removal(std::string_view name);

struct SnapshotEntry {
  std::uint64_t local_index = 0;
  std::uint64_t global_index = 0;
  double priority = 0.0;
  HybridTimestamp timestamp;
  std::uint64_t epoch = 0;

  bool operator==(const SnapshotEntry&) const = default;
};

// Selectable (COMMITTED, priority > 0) entries in ascending local order.
using StatusSnapshot = std::vector<SnapshotEntry>;

// Readable from any process mapping the shard.
StatusSnapshot snapshot_range(const Shard& shard, PartitionRange range);
StatusSnapshot snapshot_shard(const Shard& shard);

struct StateCounts {
  std::uint64_t free = 0;
  std::uint64_t writing = 0;
  std::uint64_t committed = 0;
  std::uint64_t evicted = 0;

  std::uint64_t total() const noexcept { return free + writing + committed + evicted; }
};

StateCounts count_states(const Shard& shard, PartitionRange range);

// commits - evictions - releases summed over every partition.
std::int64_t conserved_committed(const Shard& shard);

class LocalIndexManager;

// Views of one freshly allocated row, one per column.
class WriteBuffer {
 public:
  std::uint64_t local_index() const noexcept { return local_index_; }
  std::uint64_t epoch() const noexcept { return epoch_; }
  bool committed() const noexcept { return committed_; }

  std::span<std::byte> column(std::size_t i) { return views_.at(i); }
  std::span<std::byte> column(std::string_view name);
  std::size_t columns() const noexcept { return views_.size(); }

 private:
  friend class LocalIndexManager;

  const TrajectorySchema* schema_ = nullptr;
  std::uint64_t local_index_ = 0;
  std::uint64_t epoch_ = 0;
  std::vector<std::span<std::byte>> views_;
  bool committed_ = false;
};

struct ManagerOptions {
  RemovalStrategy removal = RemovalStrategy::fifo;
  // Watermark on COMMITTED indices in this manager's range; defaults to the
  // range size. Reaching it at commit evicts a victim first.
  std::optional<std::uint64_t> max_selectable;
};

// Single-owner allocator over one contiguous partition of a shard. Free
// queue, counters and status records live in the shard region; the ordered
// set of committed indices used for victim selection is rebuilt on attach.
class LocalIndexManager {
 public:
  // Takes ownership of the partition. Indices a previous owner left WRITING
  // or EVICTED are reclaimed to FREE and re-enqueued.
  static LocalIndexManager attach(Shard& shard, std::uint32_t partition = 0, const ManagerOptions& options = {});

  WriteBuffer allocate();
  std::uint64_t commit(WriteBuffer& buffer, double priority);
  std::uint64_t commit(WriteBuffer& buffer, double priority, HybridTimestamp ts);
  void release(std::uint64_t local_index);
  std::uint64_t select_victim() const;
  // select_victim + transition to EVICTED (priority 0). Index stays out of
  // the free queue until released or reused.
  std::uint64_t evict();
  StatusSnapshot sync() const;

  PartitionRange range() const noexcept { return range_; }
  std::uint32_t partition() const noexcept { return partition_; }
  RemovalStrategy removal() const noexcept { return options_.removal; }
  std::uint64_t max_selectable() const noexcept { return max_selectable_; }
  std::uint64_t committed_count() const noexcept { return committed_.size(); }
  std::uint64_t reclaimed_on_attach() const noexcept { return reclaimed_; }
  std::vector<std::uint64_t> free_queue() const;
  Shard& shard() noexcept { return *shard_; }
  const Shard& shard() const noexcept { return *shard_; }

 private:
  LocalIndexManager(Shard& shard, std::uint32_t partition, const ManagerOptions& options);

  void check_owned(std::uint64_t local_index) const;
  void evict_to(IndexState state, std::uint64_t victim);

  Shard* shard_;
  std::uint32_t partition_;
  PartitionRange range_;
  ManagerOptions options_;
  std::uint64_t max_selectable_;
  std::uint16_t node_id_;
  std::set<std::pair<HybridTimestamp, std::uint64_t>> committed_;
  std::uint64_t reclaimed_ = 0;
};

}  // namespace gear
