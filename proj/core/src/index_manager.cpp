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

#include "gear/index_manager.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gear/error.hpp"

namespace gear {

RemovalStrategy parse_removal(std::string_view name) {
  if (name == "fifo" || name == "FIFO") return RemovalStrategy::fifo;
  if (name == "lifo" || name == "LIFO") return RemovalStrategy::lifo;
  throw Error(Errc::invalid_argument, "unknown removal strategy '" + std::string(name) + "'");
}

StatusSnapshot snapshot_range(const Shard& shard, PartitionRange range) {
  const auto status = shard.status();
  StatusSnapshot out;
  for (auto i = range.begin; i < range.end; ++i) {
    const auto s = status.read(i);
    if (s.state == IndexState::committed && s.priority > 0.0) {
      out.push_back({i, shard.to_global(i), s.priority, s.timestamp, s.epoch});
    }
  }
  return out;
}

StatusSnapshot snapshot_shard(const Shard& shard) { return snapshot_range(shard, {0, shard.capacity()}); }

StateCounts count_states(const Shard& shard, PartitionRange range) {
  const auto status = shard.status();
  StateCounts c;
  for (auto i = range.begin; i < range.end; ++i) {
    switch (status.state(i)) {
      case IndexState::free: ++c.free; break;
      case IndexState::writing: ++c.writing; break;
      case IndexState::committed: ++c.committed; break;
      case IndexState::evicted: ++c.evicted; break;
    }
  }
  return c;
}

std::int64_t conserved_committed(const Shard& shard) {
  const auto alloc = shard.allocator();
  std::int64_t total = 0;
  for (std::uint32_t p = 0; p < alloc.partitions(); ++p) {
    total += static_cast<std::int64_t>(alloc.counter(p, Counter::commits));
    total -= static_cast<std::int64_t>(alloc.counter(p, Counter::evictions));
    total -= static_cast<std::int64_t>(alloc.counter(p, Counter::releases));
  }
  return total;
}

std::span<std::byte> WriteBuffer::column(std::string_view name) { return views_.at(schema_->index_of(name)); }

LocalIndexManager::LocalIndexManager(Shard& shard, std::uint32_t partition, const ManagerOptions& options)
    : shard_(&shard),
      partition_(partition),
      range_(shard.allocator().range(partition)),
      options_(options),
      max_selectable_(std::min(options.max_selectable.value_or(range_.size()), range_.size())),
      node_id_(static_cast<std::uint16_t>(shard.shard_id())) {
  if (max_selectable_ == 0) throw Error(Errc::invalid_argument, "max_selectable must be positive");
}

LocalIndexManager LocalIndexManager::attach(Shard& shard, std::uint32_t partition, const ManagerOptions& options) {
  LocalIndexManager mgr(shard, partition, options);
  auto status = shard.status();
  auto alloc = shard.allocator();

  std::vector<char> in_queue(mgr.range_.size(), 0);
  std::vector<std::uint64_t> order;
  bool repair = false;
  for (auto idx : alloc.queue_contents(partition)) {
    if (!mgr.range_.contains(idx) || in_queue[idx - mgr.range_.begin] ||
        status.state(idx) != IndexState::free) {
      repair = true;
      continue;
    }
    in_queue[idx - mgr.range_.begin] = 1;
    order.push_back(idx);
  }
  for (auto i = mgr.range_.begin; i < mgr.range_.end; ++i) {
    const auto s = status.read(i);
    if (s.state == IndexState::writing || s.state == IndexState::evicted) {
      status.publish(i, IndexState::free, 0.0, {});
      ++mgr.reclaimed_;
    } else if (s.state == IndexState::committed) {
      mgr.committed_.emplace(s.timestamp, i);
      alloc.observe_logical_seq(s.timestamp.logical_seq);
      continue;
    }
    if (!in_queue[i - mgr.range_.begin]) {
      order.push_back(i);
      repair = true;
    }
  }
  if (repair) alloc.rewrite_queue(partition, order);
  return mgr;
}

void LocalIndexManager::check_owned(std::uint64_t local_index) const {
  if (!range_.contains(local_index)) {
    throw Error(Errc::out_of_range, "index " + std::to_string(local_index) + " not owned by partition " +
                                        std::to_string(partition_));
  }
}

std::uint64_t LocalIndexManager::select_victim() const {
  if (committed_.empty()) throw Error(Errc::state, "no COMMITTED index to evict");
  return options_.removal == RemovalStrategy::fifo ? committed_.begin()->second : committed_.rbegin()->second;
}

void LocalIndexManager::evict_to(IndexState state, std::uint64_t victim) {
  auto status = shard_->status();
  const auto s = status.read(victim);
  committed_.erase({s.timestamp, victim});
  status.publish(victim, state, 0.0, s.timestamp);
  shard_->allocator().bump(partition_, Counter::evictions);
}

std::uint64_t LocalIndexManager::evict() {
  const auto victim = select_victim();
  evict_to(IndexState::evicted, victim);
  return victim;
}

WriteBuffer LocalIndexManager::allocate() {
  auto alloc = shard_->allocator();
  std::uint64_t index;
  if (auto popped = alloc.pop(partition_)) {
    index = *popped;
  } else if (!committed_.empty()) {
    index = select_victim();
    evict_to(IndexState::evicted, index);
  } else {
    throw Error(Errc::exhausted, "partition " + std::to_string(partition_) + " has no free or evictable index");
  }
  auto status = shard_->status();
  status.publish(index, IndexState::writing, 0.0, {});

  WriteBuffer buf;
  buf.schema_ = &shard_->schema();
  buf.local_index_ = index;
  buf.epoch_ = status.stable_epoch(index);
  for (std::size_t c = 0; c < shard_->schema().size(); ++c) buf.views_.push_back(shard_->block(c, index));
  return buf;
}

std::uint64_t LocalIndexManager::commit(WriteBuffer& buffer, double priority) {
  return commit(buffer, priority, {shard_->allocator().next_logical_seq(), node_id_});
}

std::uint64_t LocalIndexManager::commit(WriteBuffer& buffer, double priority, HybridTimestamp ts) {
  if (buffer.committed_) throw Error(Errc::state, "buffer already committed");
  if (!(priority >= 0.0) || !std::isfinite(priority)) {
    throw Error(Errc::invalid_argument, "priority must be finite and non-negative");
  }
  const auto index = buffer.local_index_;
  check_owned(index);
  auto status = shard_->status();
  if (status.state(index) != IndexState::writing || status.stable_epoch(index) != buffer.epoch_) {
    throw Error(Errc::state, "buffer for index " + std::to_string(index) + " is no longer WRITING");
  }
  auto alloc = shard_->allocator();
  alloc.observe_logical_seq(ts.logical_seq);
  if (committed_.size() >= max_selectable_) {
    const auto victim = select_victim();
    evict_to(IndexState::evicted, victim);
    status.publish(victim, IndexState::free, 0.0, {});
    alloc.push(partition_, victim);
  }
  status.publish(index, IndexState::committed, priority, ts);
  committed_.emplace(ts, index);
  alloc.bump(partition_, Counter::commits);
  buffer.committed_ = true;
  return index;
}

void LocalIndexManager::release(std::uint64_t local_index) {
  check_owned(local_index);
  auto status = shard_->status();
  const auto s = status.read(local_index);
  if (s.state == IndexState::committed) {
    committed_.erase({s.timestamp, local_index});
    shard_->allocator().bump(partition_, Counter::releases);
  } else if (s.state != IndexState::evicted) {
    throw Error(Errc::state, "cannot release index " + std::to_string(local_index) + " in state " +
                                 state_name(s.state));
  }
  status.publish(local_index, IndexState::free, 0.0, {});
  shard_->allocator().push(partition_, local_index);
}

StatusSnapshot LocalIndexManager::sync() const { return snapshot_range(*shard_, range_); }

std::vector<std::uint64_t> LocalIndexManager::free_queue() const {
  return shard_->allocator().queue_contents(partition_);
}

}  // namespace gear
