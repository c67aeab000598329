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

// gear-bench: launches an emulated cluster, populates the shards and runs
// the synchronized select/collect loop, printing a JSON or CSV report.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gear/config.hpp"
#include "gear/error.hpp"
#include "gear/runtime.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint32_t> nodes;
  std::optional<std::uint32_t> clients;
  std::optional<std::uint64_t> capacity;
  std::optional<std::uint32_t> batch_size;
  std::optional<std::string> strategy;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> block_bytes;
  std::optional<std::uint32_t> iters;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> report;
  std::optional<std::string> ingest;
  std::optional<double> online_rate;
  std::optional<double> duration;
  std::optional<std::string> collect;
  std::optional<std::string> priority;
  std::optional<std::uint32_t> parallelism;
};

gear::ClusterConfig build_config(const Overrides& o) {
  auto c = o.config_path.empty() ? gear::ClusterConfig{} : gear::load_config(o.config_path);
  try {
    if (o.nodes) c.nodes = *o.nodes;
    if (o.clients) c.clients_per_node = *o.clients;
    if (o.capacity) c.capacity = *o.capacity;
    if (o.batch_size) c.batch_size = *o.batch_size;
    if (o.strategy) c.strategy = gear::parse_strategy(*o.strategy);
    if (o.mode) c.mode = gear::parse_mode(*o.mode);
    if (o.block_bytes) c.schema = gear::TrajectorySchema::synthetic(*o.block_bytes).columns();
    if (o.iters) c.iterations = *o.iters;
    if (o.seed) c.seed = *o.seed;
    if (o.report) c.report = *o.report == "csv" ? gear::ReportFormat::csv : gear::ReportFormat::json;
    if (o.ingest) c.ingest = *o.ingest;
    if (o.online_rate) c.online_rate = *o.online_rate;
    if (o.duration) c.duration = *o.duration;
    if (o.collect) c.collect_full_batch = *o.collect == "full";
    if (o.priority) c.priority = gear::PriorityDist::parse(*o.priority);
    if (o.parallelism) c.parallelism = *o.parallelism;
  } catch (const gear::Error& e) {
    throw gear::Error(gear::Errc::config, e.what());
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emulated-cluster trajectory selection and collection benchmark"};
  Overrides o;
  app.add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--nodes", o.nodes, "Emulated nodes (one shard each)");
  app.add_option("--clients", o.clients, "Client processes per node");
  app.add_option("--capacity", o.capacity, "Blocks per shard");
  app.add_option("--batch-size", o.batch_size, "Trajectories selected per iteration");
  app.add_option("--strategy", o.strategy)->check(CLI::IsMember({"uniform", "weighted", "fifo", "topk"}));
  app.add_option("--mode", o.mode)->check(CLI::IsMember({"centralized", "decentralized"}));
  app.add_option("--block-bytes", o.block_bytes, "Synthetic one-column schema of B bytes per block");
  app.add_option("--iters", o.iters, "Bench iterations");
  app.add_option("--seed", o.seed);
  app.add_option("--report", o.report)->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--ingest", o.ingest, "Offline dataset file");
  app.add_option("--online-rate", o.online_rate, "Online writes per second per client");
  app.add_option("--duration", o.duration, "Online generation time in seconds");
  app.add_option("--collect", o.collect, "Each client collects its slice or the full batch")
      ->check(CLI::IsMember({"sliced", "full"}));
  app.add_option("--priority", o.priority, "constant:C or uniform:LO:HI");
  app.add_option("--parallelism", o.parallelism, "Sampling workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  gear::ClusterConfig config;
  try {
    config = build_config(o);
  } catch (const gear::Error& e) {
    std::cerr << "gear-bench: configuration error: " << e.what() << '\n';
    return e.code() == gear::Errc::config ? kExitConfig : kExitRuntime;
  }

  try {
    auto cluster = gear::launch_cluster(config);
    const auto report = cluster.wait();
    std::cout << (config.report == gear::ReportFormat::csv ? report.to_csv() : report.to_json() + "\n");
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "gear-bench: " << e.what() << '\n';
    return kExitRuntime;
  }
}
