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
#include <span>
#include <vector>

namespace gear {

// One shard per node; shard id == node id.
struct ClusterTopology {
  std::uint32_t nodes = 1;
  // Ordered node lists, one per pipeline. Empty means every node is its own
  // single-stage pipeline (all nodes are heads).
  std::vector<std::vector<std::uint32_t>> pipeline_groups;
  std::uint64_t shard_capacity = 1;

  void validate() const;
  // First node of each group, ascending.
  std::vector<std::uint32_t> head_nodes() const;
  bool is_head(std::uint32_t node) const;
};

struct ShardSlice {
  std::uint64_t shard_id = 0;
  std::vector<std::uint64_t> local_indices;
  std::vector<std::size_t> positions;  // where each row sits in the original request

  bool operator==(const ShardSlice&) const = default;
};

// shard = g / capacity, local = g % capacity. Slices come back in ascending
// shard order; within a slice, request order is kept.
std::vector<ShardSlice> translate(std::span<const std::uint64_t> global_indices, std::uint64_t capacity);

// Places one ingestion batch. Trajectories are ranked by priority (desc,
// ties by batch position); the top ceil(n * heads / nodes) go round-robin to
// head nodes, the rest round-robin to non-head nodes. Returns a shard id per
// input position.
std::vector<std::uint32_t> place_offline(std::span<const double> priorities, const ClusterTopology& topology);

// Online generators always write to the shard of the node they run on.
std::uint32_t place_online(std::uint32_t origin_node, const ClusterTopology& topology);

}  // namespace gear
