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

#include "gear/status.hpp"

#include <atomic>
#include <string>

#include "gear/byte_io.hpp"
#include "gear/error.hpp"

namespace gear {
namespace {

template <typename T>
std::atomic_ref<T> at(std::byte* p) {
  return std::atomic_ref<T>(*reinterpret_cast<T*>(p));
}

constexpr std::size_t kState = 0;
constexpr std::size_t kNode = 2;
constexpr std::size_t kPriority = 8;
constexpr std::size_t kSeq = 16;
constexpr std::size_t kEpoch = 24;

constexpr std::size_t kBegin = 0;
constexpr std::size_t kEnd = 8;
constexpr std::size_t kHead = 16;
constexpr std::size_t kCount = 24;
constexpr std::size_t kCounters = 32;

}  // namespace

const char* state_name(IndexState state) noexcept {
  switch (state) {
    case IndexState::free: return "FREE";
    case IndexState::writing: return "WRITING";
    case IndexState::committed: return "COMMITTED";
    case IndexState::evicted: return "EVICTED";
  }
  return "?";
}

IndexStatus StatusTable::read(std::uint64_t index) const {
  std::byte* r = record(index);
  for (;;) {
    const auto e1 = at<std::uint64_t>(r + kEpoch).load(std::memory_order_acquire);
    if (e1 & 1) continue;
    IndexStatus s;
    s.state = static_cast<IndexState>(at<std::uint8_t>(r + kState).load(std::memory_order_relaxed));
    s.timestamp.node_id = at<std::uint16_t>(r + kNode).load(std::memory_order_relaxed);
    s.priority = std::bit_cast<double>(at<std::uint64_t>(r + kPriority).load(std::memory_order_relaxed));
    s.timestamp.logical_seq = at<std::uint64_t>(r + kSeq).load(std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_acquire);
    const auto e2 = at<std::uint64_t>(r + kEpoch).load(std::memory_order_relaxed);
    if (e1 == e2) {
      s.epoch = e1;
      return s;
    }
  }
}

IndexState StatusTable::state(std::uint64_t index) const {
  return static_cast<IndexState>(at<std::uint8_t>(record(index) + kState).load(std::memory_order_acquire));
}

std::uint64_t StatusTable::stable_epoch(std::uint64_t index) const {
  for (;;) {
    auto e = at<std::uint64_t>(record(index) + kEpoch).load(std::memory_order_acquire);
    if ((e & 1) == 0) return e;
  }
}

std::uint64_t StatusTable::raw_epoch(std::uint64_t index) const {
  return at<std::uint64_t>(record(index) + kEpoch).load(std::memory_order_acquire);
}

void StatusTable::publish(std::uint64_t index, IndexState state, double priority, HybridTimestamp ts) {
  std::byte* r = record(index);
  auto epoch = at<std::uint64_t>(r + kEpoch);
  const auto e = epoch.load(std::memory_order_relaxed);
  epoch.store(e + 1, std::memory_order_relaxed);
  // Orders the odd epoch before both the field stores below and any block
  // writes the owner performs after publishing.
  std::atomic_thread_fence(std::memory_order_release);
  at<std::uint8_t>(r + kState).store(static_cast<std::uint8_t>(state), std::memory_order_relaxed);
  at<std::uint16_t>(r + kNode).store(ts.node_id, std::memory_order_relaxed);
  at<std::uint64_t>(r + kPriority).store(std::bit_cast<std::uint64_t>(priority), std::memory_order_relaxed);
  at<std::uint64_t>(r + kSeq).store(ts.logical_seq, std::memory_order_relaxed);
  epoch.store(e + 2, std::memory_order_release);
}

void AllocatorSection::initialize(std::byte* base, std::uint64_t capacity, std::uint32_t partitions,
                                  std::uint32_t shard_id) {
  if (partitions == 0 || partitions > capacity) {
    throw Error(Errc::invalid_argument, "partition count must be in [1, capacity]");
  }
  AllocatorSection s(base, capacity);
  at<std::uint32_t>(base + 0).store(shard_id);
  at<std::uint32_t>(base + 4).store(partitions);
  at<std::uint64_t>(base + 8).store(0);
  for (std::uint32_t p = 0; p < partitions; ++p) {
    const std::uint64_t begin = capacity * p / partitions;
    const std::uint64_t end = capacity * (p + 1) / partitions;
    std::byte* rec = s.part(p);
    at<std::uint64_t>(rec + kBegin).store(begin);
    at<std::uint64_t>(rec + kEnd).store(end);
    at<std::uint64_t>(rec + kHead).store(0);
    at<std::uint64_t>(rec + kCount).store(end - begin);
    for (std::uint64_t i = begin; i < end; ++i) at<std::uint64_t>(s.slots() + 8 * i).store(i);
  }
}

std::uint32_t AllocatorSection::read_partition_count(const std::byte* base) noexcept {
  return bytes::load_le<std::uint32_t>(base + 4);
}

std::byte* AllocatorSection::slots() const { return base_ + kHeaderBytes + kPartitionBytes * partitions(); }

std::uint32_t AllocatorSection::shard_id() const { return at<std::uint32_t>(base_).load(std::memory_order_relaxed); }

std::uint32_t AllocatorSection::partitions() const {
  return at<std::uint32_t>(base_ + 4).load(std::memory_order_relaxed);
}

PartitionRange AllocatorSection::range(std::uint32_t partition) const {
  if (partition >= partitions()) {
    throw Error(Errc::out_of_range, "partition " + std::to_string(partition));
  }
  std::byte* rec = part(partition);
  return {at<std::uint64_t>(rec + kBegin).load(std::memory_order_relaxed),
          at<std::uint64_t>(rec + kEnd).load(std::memory_order_relaxed)};
}

std::uint32_t AllocatorSection::partition_of(std::uint64_t local_index) const {
  const auto n = partitions();
  for (std::uint32_t p = 0; p < n; ++p) {
    if (range(p).contains(local_index)) return p;
  }
  throw Error(Errc::out_of_range, "index " + std::to_string(local_index) + " outside every partition");
}

std::uint64_t AllocatorSection::next_logical_seq() {
  return at<std::uint64_t>(base_ + 8).fetch_add(1, std::memory_order_acq_rel) + 1;
}

void AllocatorSection::observe_logical_seq(std::uint64_t seq) {
  auto clock = at<std::uint64_t>(base_ + 8);
  auto cur = clock.load(std::memory_order_relaxed);
  while (cur < seq && !clock.compare_exchange_weak(cur, seq, std::memory_order_acq_rel)) {
  }
}

std::uint64_t AllocatorSection::clock() const { return at<std::uint64_t>(base_ + 8).load(std::memory_order_acquire); }

std::uint64_t AllocatorSection::queue_size(std::uint32_t partition) const {
  return at<std::uint64_t>(part(partition) + kCount).load(std::memory_order_acquire);
}

std::vector<std::uint64_t> AllocatorSection::queue_contents(std::uint32_t partition) const {
  const auto r = range(partition);
  std::byte* rec = part(partition);
  const auto head = at<std::uint64_t>(rec + kHead).load(std::memory_order_acquire);
  const auto count = at<std::uint64_t>(rec + kCount).load(std::memory_order_acquire);
  std::vector<std::uint64_t> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count && r.size() > 0; ++i) {
    const auto slot = r.begin + (head + i) % r.size();
    out.push_back(at<std::uint64_t>(slots() + 8 * slot).load(std::memory_order_relaxed));
  }
  return out;
}

std::optional<std::uint64_t> AllocatorSection::pop(std::uint32_t partition) {
  const auto r = range(partition);
  std::byte* rec = part(partition);
  auto count = at<std::uint64_t>(rec + kCount);
  const auto n = count.load(std::memory_order_relaxed);
  if (n == 0) return std::nullopt;
  auto head = at<std::uint64_t>(rec + kHead);
  const auto h = head.load(std::memory_order_relaxed);
  const auto value = at<std::uint64_t>(slots() + 8 * (r.begin + h)).load(std::memory_order_relaxed);
  head.store((h + 1) % r.size(), std::memory_order_relaxed);
  count.store(n - 1, std::memory_order_release);
  return value;
}

void AllocatorSection::push(std::uint32_t partition, std::uint64_t local_index) {
  const auto r = range(partition);
  std::byte* rec = part(partition);
  auto count = at<std::uint64_t>(rec + kCount);
  const auto n = count.load(std::memory_order_relaxed);
  if (n >= r.size()) throw Error(Errc::state, "free queue overflow");
  const auto h = at<std::uint64_t>(rec + kHead).load(std::memory_order_relaxed);
  at<std::uint64_t>(slots() + 8 * (r.begin + (h + n) % r.size())).store(local_index, std::memory_order_relaxed);
  count.store(n + 1, std::memory_order_release);
}

void AllocatorSection::rewrite_queue(std::uint32_t partition, std::span<const std::uint64_t> order) {
  const auto r = range(partition);
  if (order.size() > r.size()) throw Error(Errc::state, "free queue overflow");
  std::byte* rec = part(partition);
  for (std::size_t i = 0; i < order.size(); ++i) {
    at<std::uint64_t>(slots() + 8 * (r.begin + i)).store(order[i], std::memory_order_relaxed);
  }
  at<std::uint64_t>(rec + kHead).store(0, std::memory_order_relaxed);
  at<std::uint64_t>(rec + kCount).store(order.size(), std::memory_order_release);
}

void AllocatorSection::bump(std::uint32_t partition, Counter counter) {
  at<std::uint64_t>(part(partition) + kCounters + 8 * static_cast<std::size_t>(counter))
      .fetch_add(1, std::memory_order_acq_rel);
}

std::uint64_t AllocatorSection::counter(std::uint32_t partition, Counter counter) const {
  return at<std::uint64_t>(part(partition) + kCounters + 8 * static_cast<std::size_t>(counter))
      .load(std::memory_order_acquire);
}

}  // namespace gear
