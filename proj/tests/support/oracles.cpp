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

#include "support/oracles.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cstring>

namespace gear::testing {

std::vector<double> blocked_scan(std::span<const double> weights, std::size_t block) {
  std::vector<double> out(weights.size());
  double carried = 0.0;  // sum of all earlier block totals
  for (std::size_t lo = 0; lo < weights.size(); lo += block) {
    const auto hi = std::min(weights.size(), lo + block);
    double local = 0.0;
    for (auto i = lo; i < hi; ++i) {
      local += weights[i];
      out[i] = lo == 0 ? local : carried + local;
    }
    carried = lo == 0 ? local : carried + local;
  }
  return out;
}

std::vector<std::uint64_t> full_sort_select(std::vector<Candidate> all, Strategy strategy, std::size_t k) {
  if (strategy == Strategy::topk) {
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
      return a.weight > b.weight || (a.weight == b.weight && a.global_index < b.global_index);
    });
  } else {
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
      if (a.timestamp.logical_seq != b.timestamp.logical_seq) return a.timestamp.logical_seq < b.timestamp.logical_seq;
      if (a.timestamp.node_id != b.timestamp.node_id) return a.timestamp.node_id < b.timestamp.node_id;
      return a.global_index < b.global_index;
    });
  }
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].global_index);
  return out;
}

std::vector<std::vector<std::byte>> gather_rows(std::span<const Shard* const> shards, std::uint64_t capacity,
                                                std::span<const std::uint64_t> global_indices, std::size_t column) {
  std::vector<std::vector<std::byte>> rows;
  for (auto g : global_indices) {
    const Shard* shard = shards[g / capacity];
    const auto block = shard->block(column, g % capacity);
    rows.emplace_back(block.begin(), block.end());
  }
  return rows;
}

double chi_squared(std::span<const std::uint64_t> observed, std::span<const double> probabilities) {
  std::uint64_t n = 0;
  for (auto o : observed) n += o;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = probabilities[i] * static_cast<double>(n);
    const double d = static_cast<double>(observed[i]) - expected;
    stat += d * d / expected;
  }
  return stat;
}

double chi_squared_quantile(double confidence, double degrees_of_freedom) {
  return boost::math::quantile(boost::math::chi_squared(degrees_of_freedom), confidence);
}

ReferencePartition::ReferencePartition(std::uint64_t begin, std::uint64_t end, bool fifo,
                                       std::uint64_t max_selectable, std::uint16_t node_id, std::uint64_t* clock)
    : begin_(begin), fifo_(fifo), max_selectable_(max_selectable), node_id_(node_id), clock_(clock),
      slots_(end - begin) {
  for (auto i = begin; i < end; ++i) queue_.push_back(i);
}

std::optional<std::uint64_t> ReferencePartition::victim() const {
  std::optional<std::uint64_t> best;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].state != IndexState::committed) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& a = slots_[i].timestamp;
    const auto& b = slots_[*best].timestamp;
    const bool older = a.logical_seq < b.logical_seq || (a.logical_seq == b.logical_seq && a.node_id < b.node_id);
    if (fifo_ ? older : !older) best = i;
  }
  if (best) return *best + begin_;
  return std::nullopt;
}

std::optional<std::uint64_t> ReferencePartition::allocate() {
  std::uint64_t index;
  if (!queue_.empty()) {
    index = queue_.front();
    queue_.pop_front();
  } else if (auto v = victim()) {
    index = *v;
    ++evictions;
  } else {
    return std::nullopt;
  }
  at(index) = {IndexState::writing, 0.0, {}};
  return index;
}

bool ReferencePartition::commit(std::uint64_t index, double priority) {
  if (at(index).state != IndexState::writing) return false;
  const HybridTimestamp ts{++*clock_, node_id_};
  std::uint64_t committed = 0;
  for (const auto& s : slots_) committed += s.state == IndexState::committed;
  if (committed >= max_selectable_) {
    const auto v = *victim();
    at(v) = {IndexState::free, 0.0, {}};
    queue_.push_back(v);
    ++evictions;
  }
  at(index) = {IndexState::committed, priority, ts};
  ++commits;
  return true;
}

bool ReferencePartition::release(std::uint64_t index) {
  auto& s = at(index);
  if (s.state == IndexState::committed) {
    ++releases;
  } else if (s.state != IndexState::evicted) {
    return false;
  }
  s = {IndexState::free, 0.0, {}};
  queue_.push_back(index);
  return true;
}

std::optional<std::uint64_t> ReferencePartition::evict() {
  const auto v = victim();
  if (!v) return std::nullopt;
  auto& s = at(*v);
  s = {IndexState::evicted, 0.0, s.timestamp};
  ++evictions;
  return v;
}

}  // namespace gear::testing
