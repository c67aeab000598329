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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gear/index_manager.hpp"
#include "gear/placement.hpp"
#include "gear/sampling.hpp"
#include "gear/schema.hpp"
#include "gear/shard.hpp"
#include "gear/socket.hpp"

namespace gear {

struct PriorityDist {
  enum class Kind : std::uint8_t { constant, uniform };
  Kind kind = Kind::uniform;
  double low = 0.0;  // the constant for Kind::constant
  double high = 1.0;

  // Deterministic draw number i of the given stream.
  double draw(std::uint64_t seed, std::uint64_t i, std::uint32_t stream) const;
  static PriorityDist parse(std::string_view text);  // "constant:C" or "uniform:LO:HI"
  std::string to_string() const;
};

enum class ReportFormat : std::uint8_t { json, csv };

// Everything one bench run needs. File keys use the same names; see
// load_config.
struct ClusterConfig {
  std::uint32_t nodes = 1;
  std::uint32_t clients_per_node = 1;
  std::uint64_t capacity = 1024;
  std::vector<ColumnSpec> schema = TrajectorySchema::synthetic(4096).columns();
  Strategy strategy = Strategy::uniform;
  SelectionMode mode = SelectionMode::centralized;
  std::uint32_t batch_size = 32;
  std::uint64_t seed = 0;
  bool with_replacement = true;
  // Collector endpoint per node; empty means loopback with ephemeral ports.
  std::vector<Endpoint> addresses;
  Endpoint coordinator{"127.0.0.1", 0};
  std::vector<std::vector<std::uint32_t>> pipeline_groups;
  RemovalStrategy removal_strategy = RemovalStrategy::fifo;
  std::optional<std::uint64_t> max_selectable;  // per shard
  std::string cluster_id;                       // empty: derived from the launcher pid
  Backing backing = Backing::shared_region;
  std::uint64_t memory_budget = kDefaultMemoryBudget;

  std::uint32_t iterations = 10;
  std::uint32_t parallelism = 1;
  bool collect_full_batch = false;  // default: each client collects its 1/world slice
  bool verify_payload = true;
  ReportFormat report = ReportFormat::json;

  std::filesystem::path ingest;
  double online_rate = 0.0;  // trajectories per second per client
  double duration = 0.0;     // seconds
  // Fraction of each partition filled with synthetic rows before the bench
  // when neither ingest nor online generation is configured.
  double prefill = 1.0;
  PriorityDist priority;

  std::uint32_t world_size() const noexcept { return nodes * clients_per_node; }
  TrajectorySchema trajectory_schema() const { return TrajectorySchema(schema); }
  ClusterTopology topology() const { return {nodes, pipeline_groups, capacity}; }

  // Throws Error(Errc::config).
  void validate() const;
};

// Reads a JSON object; absent keys keep their defaults, unknown keys are
// rejected. "block_bytes" is shorthand for a one-column u8 schema.
ClusterConfig load_config(const std::filesystem::path& path);
ClusterConfig parse_config(std::string_view json_text, ClusterConfig base = {});
std::string config_to_json(const ClusterConfig& config);

}  // namespace gear
