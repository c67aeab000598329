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

#include "gear/placement.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "gear/error.hpp"

namespace gear {

void ClusterTopology::validate() const {
  if (nodes == 0) throw Error(Errc::config, "topology needs at least one node");
  if (shard_capacity == 0) throw Error(Errc::config, "shard capacity must be positive");
  if (pipeline_groups.empty()) return;
  std::vector<int> seen(nodes, 0);
  for (const auto& group : pipeline_groups) {
    if (group.empty()) throw Error(Errc::config, "empty pipeline group");
    for (auto n : group) {
      if (n >= nodes) throw Error(Errc::config, "pipeline group names unknown node " + std::to_string(n));
      if (seen[n]++) throw Error(Errc::config, "node " + std::to_string(n) + " appears in two pipeline groups");
    }
  }
  for (std::uint32_t n = 0; n < nodes; ++n) {
    if (!seen[n]) throw Error(Errc::config, "node " + std::to_string(n) + " is in no pipeline group");
  }
}

std::vector<std::uint32_t> ClusterTopology::head_nodes() const {
  std::vector<std::uint32_t> heads;
  if (pipeline_groups.empty()) {
    heads.resize(nodes);
    std::iota(heads.begin(), heads.end(), 0u);
    return heads;
  }
  for (const auto& g : pipeline_groups) heads.push_back(g.front());
  std::sort(heads.begin(), heads.end());
  return heads;
}

bool ClusterTopology::is_head(std::uint32_t node) const {
  const auto heads = head_nodes();
  return std::binary_search(heads.begin(), heads.end(), node);
}

std::vector<ShardSlice> translate(std::span<const std::uint64_t> global_indices, std::uint64_t capacity) {
  if (capacity == 0) throw Error(Errc::invalid_argument, "capacity must be positive");
  std::map<std::uint64_t, ShardSlice> by_shard;
  for (std::size_t pos = 0; pos < global_indices.size(); ++pos) {
    const auto g = global_indices[pos];
    auto& slice = by_shard[g / capacity];
    slice.shard_id = g / capacity;
    slice.local_indices.push_back(g % capacity);
    slice.positions.push_back(pos);
  }
  std::vector<ShardSlice> out;
  out.reserve(by_shard.size());
  for (auto& [id, slice] : by_shard) out.push_back(std::move(slice));
  return out;
}

std::vector<std::uint32_t> place_offline(std::span<const double> priorities, const ClusterTopology& topology) {
  topology.validate();
  const auto heads = topology.head_nodes();
  std::vector<std::uint32_t> others;
  for (std::uint32_t n = 0; n < topology.nodes; ++n) {
    if (!std::binary_search(heads.begin(), heads.end(), n)) others.push_back(n);
  }

  std::vector<std::size_t> order(priorities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return priorities[a] > priorities[b]; });

  const std::size_t n = priorities.size();
  const std::size_t head_slots =
      others.empty() ? n : (n * heads.size() + topology.nodes - 1) / topology.nodes;

  std::vector<std::uint32_t> out(n);
  for (std::size_t rank = 0; rank < n; ++rank) {
    out[order[rank]] = rank < head_slots ? heads[rank % heads.size()] : others[(rank - head_slots) % others.size()];
  }
  return out;
}

std::uint32_t place_online(std::uint32_t origin_node, const ClusterTopology& topology) {
  if (origin_node >= topology.nodes) {
    throw Error(Errc::unknown_node, "node " + std::to_string(origin_node) + " is not in the topology");
  }
  return origin_node;
}

}  // namespace gear
