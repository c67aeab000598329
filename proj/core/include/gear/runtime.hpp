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

#include <sys/types.h>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gear/collector.hpp"
#include "gear/config.hpp"
#include "gear/index_manager.hpp"
#include "gear/shard.hpp"
#include "gear/world.hpp"

namespace gear {

// One client process's view of the cluster: the shard of its node, the
// partition it owns, a collector and its collective group. World rank is
// node * clients_per_node + client.
class NodeRuntime {
 public:
  NodeRuntime(const ClusterConfig& config, std::uint32_t node_id, std::uint32_t client, Shard& shard, World& world,
              std::map<std::uint64_t, Endpoint> remotes = {});

  const ClusterConfig& config() const noexcept { return config_; }
  std::uint32_t node_id() const noexcept { return node_id_; }
  std::uint32_t client() const noexcept { return client_; }
  Shard& shard() noexcept { return *shard_; }
  LocalIndexManager& manager() noexcept { return manager_; }
  Collector& collector() noexcept { return collector_; }
  World& world() noexcept { return *world_; }

  // Stamp for the next synthetic row written by this client.
  std::uint64_t next_stamp() noexcept;

 private:
  ClusterConfig config_;
  std::uint32_t node_id_;
  std::uint32_t client_;
  Shard* shard_;
  World* world_;
  LocalIndexManager manager_;
  Collector collector_;
  std::uint64_t written_ = 0;
};

// Places the dataset with place_offline and writes this client's share: of
// the records assigned to its node, every clients_per_node-th one starting at
// its client number. Full partitions evict per the removal strategy.
// Returns rows written by this client.
std::uint64_t ingest_offline(NodeRuntime& runtime, const std::filesystem::path& dataset);

// Writes 'rows' synthetic trajectories into the runtime's partition.
std::uint64_t fill_synthetic(NodeRuntime& runtime, std::uint64_t rows);

// Paced writes at 'rate' rows/s for 'seconds'; returns rows committed.
std::uint64_t run_online_generator(NodeRuntime& runtime, double rate, double seconds, const PriorityDist& priority);

struct IterationSample {
  double select_seconds = 0.0;
  double collect_seconds = 0.0;
  std::uint64_t bytes = 0;
  std::uint64_t rows = 0;
  std::uint64_t digest = 0;  // FNV-1a of the selected index list
};

struct ThroughputSummary {
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double overall = 0.0;  // total bytes / total collection time
};

// Per-iteration numbers are cluster-wide on rank 0: latencies are the
// slowest client's, bytes the sum over clients.
struct BenchReport {
  ClusterConfig config;
  std::vector<IterationSample> iterations;
  bool spmd_consistent = true;
  bool conservation_ok = true;
  std::uint64_t checksum_failures = 0;
  std::uint64_t selection_wire_bytes = 0;

  ThroughputSummary throughput() const;
  std::string to_json() const;
  std::string to_csv() const;
  static BenchReport from_json(std::string_view text);
};

// Collective over the runtime's world; every rank must call it.
BenchReport bench_loop(NodeRuntime& runtime, std::uint32_t iterations);

// Full bench lifecycle of one client: populate, then bench_loop.
BenchReport run_client(NodeRuntime& runtime);

// Forked cluster: one server process per node hosting its shard and
// collector, one process per client. A single-client config runs in-process
// on a private shard with a no-op world.
class ClusterHandle {
 public:
  ClusterHandle(ClusterHandle&&) noexcept;
  ClusterHandle& operator=(ClusterHandle&&) = delete;
  ~ClusterHandle();

  // Blocks until every client exits, then stops the node servers. Throws
  // Error(Errc::state) if any client failed.
  BenchReport wait();

  std::vector<pid_t> client_pids() const { return clients_; }
  const std::vector<std::string>& region_names() const noexcept { return regions_; }

 private:
  friend ClusterHandle launch_cluster(const ClusterConfig& config);
  ClusterHandle() = default;

  ClusterConfig config_;
  std::vector<Shard> shards_;
  std::vector<std::string> regions_;
  std::vector<pid_t> servers_;
  std::vector<pid_t> clients_;
  std::vector<int> server_stop_fds_;
  int report_fd_ = -1;
  bool inline_ = false;
  bool waited_ = false;
};

ClusterHandle launch_cluster(const ClusterConfig& config);

}  // namespace gear
