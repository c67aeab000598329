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

#include "gear/runtime.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <thread>

#include "gear/byte_io.hpp"
#include "gear/dataset.hpp"
#include "gear/error.hpp"
#include "gear/payload.hpp"
#include "gear/placement.hpp"
#include "gear/selection.hpp"
#include "gear/wire.hpp"
#include "json.hpp"

namespace gear {
namespace {

using Clock = std::chrono::steady_clock;
constexpr std::uint32_t kPriorityStream = 0x70726900;
constexpr std::size_t kIngestBatch = 1024;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ManagerOptions manager_options(const ClusterConfig& config, const Shard& shard, std::uint32_t client) {
  ManagerOptions opts;
  opts.removal = config.removal_strategy;
  if (config.max_selectable) {
    const auto share = shard.allocator().range(client).size();
    opts.max_selectable = std::max<std::uint64_t>(1, *config.max_selectable * share / shard.capacity());
  }
  return opts;
}

std::uint32_t rank_of(const ClusterConfig& config, std::uint32_t node, std::uint32_t client) {
  return node * config.clients_per_node + client;
}

void write_synthetic(NodeRuntime& rt, const PriorityDist& priority) {
  auto buf = rt.manager().allocate();
  const auto stamp = rt.next_stamp();
  for (std::size_t c = 0; c < buf.columns(); ++c) fill_pattern(buf.column(c), stamp, static_cast<std::uint32_t>(c));
  rt.manager().commit(buf, priority.draw(rt.config().seed, stamp, kPriorityStream));
}

std::uint64_t digest(std::span<const std::uint64_t> indices) {
  std::vector<std::byte> buf;
  bytes::Writer w(buf);
  for (auto i : indices) w.put(i);
  return bytes::fnv1a(buf);
}

struct RankStats {
  std::vector<IterationSample> samples;
  bool conservation_ok = true;
  std::uint64_t checksum_failures = 0;
};

std::vector<std::byte> encode_stats(const RankStats& s) {
  std::vector<std::byte> out;
  bytes::Writer w(out);
  w.put(static_cast<std::uint32_t>(s.samples.size()));
  for (const auto& it : s.samples) {
    w.put_f64(it.select_seconds).put_f64(it.collect_seconds).put(it.bytes).put(it.rows).put(it.digest);
  }
  w.put(static_cast<std::uint8_t>(s.conservation_ok)).put(s.checksum_failures);
  return out;
}

RankStats decode_stats(std::span<const std::byte> data) {
  bytes::Reader r(data);
  RankStats s;
  s.samples.resize(r.get<std::uint32_t>());
  for (auto& it : s.samples) {
    it.select_seconds = r.get_f64();
    it.collect_seconds = r.get_f64();
    it.bytes = r.get<std::uint64_t>();
    it.rows = r.get<std::uint64_t>();
    it.digest = r.get<std::uint64_t>();
  }
  s.conservation_ok = r.get<std::uint8_t>() != 0;
  s.checksum_failures = r.get<std::uint64_t>();
  return s;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

}  // namespace

NodeRuntime::NodeRuntime(const ClusterConfig& config, std::uint32_t node_id, std::uint32_t client, Shard& shard,
                         World& world, std::map<std::uint64_t, Endpoint> remotes)
    : config_(config),
      node_id_(node_id),
      client_(client),
      shard_(&shard),
      world_(&world),
      manager_(LocalIndexManager::attach(shard, client, manager_options(config, shard, client))),
      collector_(shard.schema(), shard.capacity(), &shard, std::move(remotes)) {
  if (shard.shard_id() != node_id) throw Error(Errc::invalid_argument, "shard id must equal node id");
  if (world.rank() != rank_of(config, node_id, client) || world.size() != config.world_size()) {
    throw Error(Errc::invalid_argument, "world rank/size disagree with the configuration");
  }
}

std::uint64_t NodeRuntime::next_stamp() noexcept {
  const std::uint64_t rank = rank_of(config_, node_id_, client_);
  return ((config_.seed & 0xffff) << 48) | ((rank + 1) << 32) | written_++;
}

std::uint64_t ingest_offline(NodeRuntime& rt, const std::filesystem::path& dataset) {
  DatasetReader reader(dataset);
  if (reader.schema().hash() != rt.shard().schema().hash()) {
    throw Error(Errc::format, dataset.string() + ": dataset schema differs from the shard schema");
  }
  const auto topology = rt.config().topology();
  const auto clients = rt.config().clients_per_node;
  std::vector<std::uint64_t> seen(rt.config().nodes, 0);
  std::uint64_t written = 0;

  std::vector<DatasetRecord> batch;
  std::vector<double> priorities;
  for (bool more = true; more;) {
    batch.clear();
    priorities.clear();
    DatasetRecord rec;
    while (batch.size() < kIngestBatch && (more = reader.next(rec))) {
      priorities.push_back(rec.priority);
      batch.push_back(std::move(rec));
    }
    if (batch.empty()) break;
    const auto placement = place_offline(priorities, topology);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto node = placement[i];
      if (seen[node]++ % clients != rt.client() || node != rt.node_id()) continue;
      auto buf = rt.manager().allocate();
      for (std::size_t c = 0; c < buf.columns(); ++c) {
        std::memcpy(buf.column(c).data(), batch[i].columns[c].data(), batch[i].columns[c].size());
      }
      rt.manager().commit(buf, batch[i].priority);
      ++written;
    }
  }
  return written;
}

std::uint64_t fill_synthetic(NodeRuntime& rt, std::uint64_t rows) {
  for (std::uint64_t i = 0; i < rows; ++i) write_synthetic(rt, rt.config().priority);
  return rows;
}

std::uint64_t run_online_generator(NodeRuntime& rt, double rate, double seconds, const PriorityDist& priority) {
  if (!(rate > 0) || !(seconds > 0)) return 0;
  if (place_online(rt.node_id(), rt.config().topology()) != rt.shard().shard_id()) {
    throw Error(Errc::state, "online writes must target the local shard");
  }
  const auto start = Clock::now();
  const auto end = start + std::chrono::duration<double>(seconds);
  std::uint64_t n = 0;
  for (;;) {
    const auto due = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(n / rate));
    if (due >= end) break;
    std::this_thread::sleep_until(due);
    write_synthetic(rt, priority);
    ++n;
  }
  return n;
}

ThroughputSummary BenchReport::throughput() const {
  ThroughputSummary t;
  std::vector<double> tp;
  double bytes = 0;
  double secs = 0;
  for (const auto& it : iterations) {
    tp.push_back(static_cast<double>(it.bytes) / std::max(it.collect_seconds, 1e-9));
    bytes += static_cast<double>(it.bytes);
    secs += it.collect_seconds;
  }
  if (tp.empty()) return t;
  for (double v : tp) t.mean += v / static_cast<double>(tp.size());
  t.p50 = percentile(tp, 0.50);
  t.p90 = percentile(tp, 0.90);
  t.p99 = percentile(tp, 0.99);
  t.overall = bytes / std::max(secs, 1e-9);
  return t;
}

std::string BenchReport::to_json() const {
  using json = nlohmann::json;
  json j;
  j["config"] = json::parse(config_to_json(config));
  j["iterations"] = json::array();
  std::uint64_t total_bytes = 0;
  double select_total = 0;
  double collect_total = 0;
  for (const auto& it : iterations) {
    j["iterations"].push_back({{"select_seconds", it.select_seconds},
                               {"collect_seconds", it.collect_seconds},
                               {"bytes", it.bytes},
                               {"rows", it.rows},
                               {"digest", it.digest}});
    total_bytes += it.bytes;
    select_total += it.select_seconds;
    collect_total += it.collect_seconds;
  }
  const auto t = throughput();
  j["throughput_bytes_per_s"] = {{"mean", t.mean}, {"p50", t.p50}, {"p90", t.p90}, {"p99", t.p99}, {"overall", t.overall}};
  j["totals"] = {{"bytes", total_bytes}, {"select_seconds", select_total}, {"collect_seconds", collect_total}};
  j["spmd_consistent"] = spmd_consistent;
  j["conservation_ok"] = conservation_ok;
  j["checksum_failures"] = checksum_failures;
  j["selection_wire_bytes"] = selection_wire_bytes;
  return j.dump(2);
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "iteration,select_seconds,collect_seconds,bytes,rows,throughput_bytes_per_s,digest\n";
  for (std::size_t i = 0; i < iterations.size(); ++i) {
    const auto& it = iterations[i];
    out << i << ',' << it.select_seconds << ',' << it.collect_seconds << ',' << it.bytes << ',' << it.rows << ','
        << static_cast<double>(it.bytes) / std::max(it.collect_seconds, 1e-9) << ',' << it.digest << '\n';
  }
  return out.str();
}

BenchReport BenchReport::from_json(std::string_view text) {
  using json = nlohmann::json;
  BenchReport r;
  try {
    const auto j = json::parse(text);
    r.config = parse_config(j.at("config").dump());
    for (const auto& it : j.at("iterations")) {
      r.iterations.push_back({it.at("select_seconds").get<double>(), it.at("collect_seconds").get<double>(),
                              it.at("bytes").get<std::uint64_t>(), it.at("rows").get<std::uint64_t>(),
                              it.at("digest").get<std::uint64_t>()});
    }
    r.spmd_consistent = j.at("spmd_consistent").get<bool>();
    r.conservation_ok = j.at("conservation_ok").get<bool>();
    r.checksum_failures = j.at("checksum_failures").get<std::uint64_t>();
    r.selection_wire_bytes = j.at("selection_wire_bytes").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("bench report: ") + e.what());
  }
  return r;
}

BenchReport bench_loop(NodeRuntime& rt, std::uint32_t iterations) {
  const auto& config = rt.config();
  auto& world = rt.world();
  const auto& schema = rt.shard().schema();
  CollectionRequest collect;
  for (const auto& c : schema.columns()) collect.columns.push_back(c.name);
  const bool verify = config.verify_payload && config.ingest.empty();
  const SelectionConfig sel{config.parallelism, config.mode};

  RankStats mine;
  std::uint64_t selection_wire = 0;
  for (std::uint32_t it = 0; it < iterations; ++it) {
    world.barrier();
    const auto candidates = to_candidates(rt.manager().sync());
    const SelectionRequest req{config.strategy, config.batch_size, config.seed + it, config.with_replacement};

    const auto wire_before = world.counters();
    auto t0 = Clock::now();
    const auto result = select(world, candidates, req, sel);
    IterationSample s;
    s.select_seconds = seconds_since(t0);
    const auto wire_after = world.counters();
    selection_wire += (wire_after.bytes_sent - wire_before.bytes_sent) +
                      (wire_after.bytes_received - wire_before.bytes_received);
    s.digest = digest(result.global_indices);

    const auto k = result.global_indices.size();
    std::size_t begin = 0;
    std::size_t end = k;
    if (!config.collect_full_batch) {
      begin = k * world.rank() / world.size();
      end = k * (world.rank() + 1) / world.size();
    }
    t0 = Clock::now();
    if (begin < end) {
      collect.global_indices.assign(result.global_indices.begin() + static_cast<std::ptrdiff_t>(begin),
                                    result.global_indices.begin() + static_cast<std::ptrdiff_t>(end));
      const auto batch = rt.collector().collect(collect);
      // Mock trainer: verify and drop.
      for (std::size_t c = 0; c < batch.columns().size(); ++c) {
        for (std::size_t r = 0; r < batch.rows(); ++r) {
          const auto row = batch.row(c, r);
          if (verify && !verify_pattern(row, static_cast<std::uint32_t>(batch.columns()[c].column_id))) {
            ++mine.checksum_failures;
          } else if (!verify && block_checksum(row) == 0) {
            ++mine.checksum_failures;  // all-zero FNV is not produced by real payloads
          }
        }
      }
      s.rows = batch.rows();
      s.bytes = batch.total_bytes();
    }
    s.collect_seconds = seconds_since(t0);
    mine.samples.push_back(s);
    world.barrier();
  }

  if (rt.client() == 0) {
    const auto total = count_states(rt.shard(), {0, rt.shard().capacity()});
    mine.conservation_ok = conserved_committed(rt.shard()) == static_cast<std::int64_t>(total.committed);
  }

  BenchReport report;
  report.config = config;
  report.selection_wire_bytes = selection_wire;
  const auto frames = world.gather(wire::encode_blob(static_cast<std::uint16_t>(world.rank()), encode_stats(mine)));
  if (!world.is_root()) {
    report.iterations = mine.samples;
    report.conservation_ok = mine.conservation_ok;
    report.checksum_failures = mine.checksum_failures;
    return report;
  }
  report.iterations.resize(iterations);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto stats = f == 0 ? mine : decode_stats(wire::blob_payload(frames[f]));
    if (stats.samples.size() != iterations) throw Error(Errc::protocol, "rank reported a different iteration count");
    report.conservation_ok = report.conservation_ok && stats.conservation_ok;
    report.checksum_failures += stats.checksum_failures;
    for (std::uint32_t i = 0; i < iterations; ++i) {
      auto& agg = report.iterations[i];
      const auto& s = stats.samples[i];
      agg.select_seconds = std::max(agg.select_seconds, s.select_seconds);
      agg.collect_seconds = std::max(agg.collect_seconds, s.collect_seconds);
      agg.bytes += s.bytes;
      agg.rows += s.rows;
      if (f == 0) agg.digest = s.digest;
      report.spmd_consistent = report.spmd_consistent && agg.digest == s.digest;
    }
  }
  return report;
}

BenchReport run_client(NodeRuntime& rt) {
  const auto& config = rt.config();
  bool populated = false;
  if (!config.ingest.empty()) {
    ingest_offline(rt, config.ingest);
    populated = true;
  }
  if (config.online_rate > 0 && config.duration > 0) {
    run_online_generator(rt, config.online_rate, config.duration, config.priority);
    populated = true;
  }
  if (!populated) {
    const auto rows = static_cast<std::uint64_t>(config.prefill * static_cast<double>(rt.manager().range().size()));
    fill_synthetic(rt, rows);
  }
  return bench_loop(rt, config.iterations);
}

// ---------------------------------------------------------------------------
// Launcher

namespace {

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

void write_all(int fd, std::string_view text) {
  while (!text.empty()) {
    const auto n = ::write(fd, text.data(), text.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::io, std::string("report pipe: ") + std::strerror(errno));
    }
    text.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string read_all(int fd) {
  std::string out;
  char buf[1 << 14];
  for (;;) {
    const auto n = ::read(fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

int wait_pid(pid_t pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

[[noreturn]] void server_main(Shard& shard, Listener listener, int stop_fd) {
  int code = 0;
  try {
    CollectorServer server(shard, std::move(listener));
    char c;
    while (::read(stop_fd, &c, 1) < 0 && errno == EINTR) {
    }
    server.stop();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gear node %u: %s\n", shard.shard_id(), e.what());
    code = 3;
  }
  ::_exit(code);
}

[[noreturn]] void client_main(const ClusterConfig& config, std::uint32_t node, std::uint32_t client,
                              const std::vector<std::string>& regions, const std::vector<Endpoint>& endpoints,
                              Listener* coordinator, const Endpoint& coordinator_endpoint, int report_fd) {
  const auto rank = rank_of(config, node, client);
  int code = 0;
  try {
    auto shard = Shard::open(regions[node], config.trajectory_schema());
    std::unique_ptr<World> world;
    if (rank == 0) {
      world = TcpWorld::host(std::move(*coordinator), config.world_size());
    } else {
      world = TcpWorld::join(coordinator_endpoint, rank, config.world_size());
    }
    std::map<std::uint64_t, Endpoint> remotes;
    for (std::uint32_t n = 0; n < config.nodes; ++n) {
      if (n != node) remotes.emplace(n, endpoints[n]);
    }
    NodeRuntime rt(config, node, client, shard, *world, std::move(remotes));
    const auto report = run_client(rt);
    if (rank == 0) write_all(report_fd, report.to_json());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gear client %u: %s\n", rank, e.what());
    code = 3;
  }
  ::_exit(code);
}

}  // namespace

ClusterHandle::ClusterHandle(ClusterHandle&& o) noexcept
    : config_(std::move(o.config_)),
      shards_(std::move(o.shards_)),
      regions_(std::move(o.regions_)),
      servers_(std::move(o.servers_)),
      clients_(std::move(o.clients_)),
      server_stop_fds_(std::move(o.server_stop_fds_)),
      report_fd_(std::exchange(o.report_fd_, -1)),
      inline_(o.inline_),
      waited_(std::exchange(o.waited_, true)) {}

ClusterHandle::~ClusterHandle() {
  if (waited_) return;
  for (auto pid : clients_) ::kill(pid, SIGKILL);
  for (auto pid : clients_) wait_pid(pid);
  for (auto& fd : server_stop_fds_) close_fd(fd);
  for (auto pid : servers_) wait_pid(pid);
  close_fd(report_fd_);
}

BenchReport ClusterHandle::wait() {
  if (waited_) throw Error(Errc::state, "cluster already waited on");
  waited_ = true;
  if (inline_) {
    SoloWorld world;
    NodeRuntime rt(config_, 0, 0, shards_.front(), world);
    auto report = run_client(rt);
    shards_.clear();
    return report;
  }

  const auto text = read_all(report_fd_);
  close_fd(report_fd_);
  std::uint32_t failed = 0;
  for (auto pid : clients_) failed += wait_pid(pid) != 0;
  for (auto& fd : server_stop_fds_) close_fd(fd);
  for (auto pid : servers_) failed += wait_pid(pid) != 0;
  shards_.clear();
  if (failed != 0) throw Error(Errc::state, std::to_string(failed) + " cluster process(es) failed");
  return BenchReport::from_json(text);
}

ClusterHandle launch_cluster(const ClusterConfig& config) {
  config.validate();
  ClusterHandle h;
  h.config_ = config;
  if (h.config_.cluster_id.empty()) h.config_.cluster_id = "bench-" + std::to_string(::getpid());
  const auto& cfg = h.config_;
  const auto schema = cfg.trajectory_schema();

  for (std::uint32_t n = 0; n < cfg.nodes; ++n) {
    ShardOptions opts;
    // Client processes open their shard by name, so a forked cluster always
    // uses shared regions.
    const bool shared = cfg.backing == Backing::shared_region || cfg.world_size() > 1;
    opts.backing = shared ? Backing::shared_region : Backing::private_memory;
    opts.memory_budget = cfg.memory_budget;
    opts.partitions = cfg.clients_per_node;
    if (shared) opts.region_name = shard_region_name(cfg.cluster_id, n);
    h.shards_.push_back(Shard::create(schema, cfg.capacity, n, opts));
    h.regions_.push_back(opts.region_name);
  }
  if (cfg.world_size() == 1) {
    h.inline_ = true;
    return h;
  }

  std::vector<Listener> listeners;
  std::vector<Endpoint> endpoints;
  for (std::uint32_t n = 0; n < cfg.nodes; ++n) {
    listeners.push_back(Listener::bind(cfg.addresses.empty() ? Endpoint{"127.0.0.1", 0} : cfg.addresses[n]));
    auto ep = listeners.back().endpoint();
    if (ep.host == "0.0.0.0") ep.host = "127.0.0.1";
    endpoints.push_back(ep);
  }
  auto coordinator = Listener::bind(cfg.coordinator);
  auto coordinator_ep = coordinator.endpoint();
  if (coordinator_ep.host == "0.0.0.0") coordinator_ep.host = "127.0.0.1";

  std::fflush(nullptr);
  for (std::uint32_t n = 0; n < cfg.nodes; ++n) {
    int fds[2];
    if (::pipe(fds) != 0) throw Error(Errc::io, std::string("pipe: ") + std::strerror(errno));
    const pid_t pid = ::fork();
    if (pid < 0) throw Error(Errc::io, std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
      ::close(fds[1]);
      for (int fd : h.server_stop_fds_) ::close(fd);
      server_main(h.shards_[n], std::move(listeners[n]), fds[0]);
    }
    ::close(fds[0]);
    h.server_stop_fds_.push_back(fds[1]);
    h.servers_.push_back(pid);
    listeners[n].close();
  }

  int report[2];
  if (::pipe(report) != 0) throw Error(Errc::io, std::string("pipe: ") + std::strerror(errno));
  for (std::uint32_t node = 0; node < cfg.nodes; ++node) {
    for (std::uint32_t client = 0; client < cfg.clients_per_node; ++client) {
      const pid_t pid = ::fork();
      if (pid < 0) throw Error(Errc::io, std::string("fork: ") + std::strerror(errno));
      if (pid == 0) {
        for (int fd : h.server_stop_fds_) ::close(fd);
        ::close(report[0]);
        const bool root = node == 0 && client == 0;
        if (!root) {
          ::close(report[1]);
          coordinator.close();
        }
        client_main(cfg, node, client, h.regions_, endpoints, &coordinator, coordinator_ep, report[1]);
      }
      h.clients_.push_back(pid);
    }
  }
  ::close(report[1]);
  coordinator.close();
  h.report_fd_ = report[0];
  return h;
}

}  // namespace gear
