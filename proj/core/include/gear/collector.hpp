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

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gear/placement.hpp"
#include "gear/shard.hpp"
#include "gear/socket.hpp"

namespace gear {

// Instrumentation for the copy discipline: one copy per block on the local
// path, region->socket plus socket->output on the remote path.
struct CopyCounters {
  std::atomic<std::uint64_t> local_block_copies{0};
  std::atomic<std::uint64_t> remote_send_copies{0};
  std::atomic<std::uint64_t> remote_recv_copies{0};
  std::atomic<std::uint64_t> remote_requests{0};
  std::atomic<std::uint64_t> aborted_responses{0};
};

// Uninitialized, fixed-size byte buffer.
class Buffer {
 public:
  Buffer() = default;
  explicit Buffer(std::size_t size) : data_(std::make_unique_for_overwrite<std::byte[]>(size)), size_(size) {}

  std::byte* data() noexcept { return data_.get(); }
  const std::byte* data() const noexcept { return data_.get(); }
  std::size_t size() const noexcept { return size_; }
  std::span<std::byte> span() noexcept { return {data_.get(), size_}; }
  std::span<const std::byte> span() const noexcept { return {data_.get(), size_}; }

 private:
  std::unique_ptr<std::byte[]> data_;
  std::size_t size_ = 0;
};

struct CollectionRequest {
  std::vector<std::uint64_t> global_indices;
  std::vector<std::string> columns;
};

// Per-column contiguous payloads; row r of every column belongs to
// global_indices[r] of the request.
class TrajectoryBatch {
 public:
  struct Column {
    ColumnSpec spec;
    std::size_t column_id = 0;
    Buffer data;
  };

  std::size_t rows() const noexcept { return rows_; }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::string_view name) const;
  std::span<const std::byte> row(std::size_t column, std::size_t r) const;
  std::uint64_t total_bytes() const noexcept;

 private:
  friend class Collector;
  std::size_t rows_ = 0;
  std::vector<Column> columns_;
};

// Destination of one column's rows: row i lands at base + position_i * stride.
struct GatherTarget {
  std::byte* base = nullptr;
  std::size_t row_stride = 0;
};

// One pass from shard memory into caller buffers, one worker per column.
// Every index must be COMMITTED and keep its epoch across the copy, otherwise
// StaleIndexError lists the offending global indices. 'positions' may be
// empty (identity).
void gather_into(const Shard& shard, std::span<const std::uint64_t> local_indices,
                 std::span<const std::size_t> positions, std::span<const std::size_t> column_ids,
                 std::span<const GatherTarget> targets, CopyCounters* counters = nullptr);

std::vector<Buffer> gather_local(const Shard& shard, std::span<const std::uint64_t> local_indices,
                                 std::span<const std::string> columns, CopyCounters* counters = nullptr);

// Serves collect requests (wire message 1) for one shard until stopped.
// Payload rows are sent straight out of the shard region.
class CollectorServer {
 public:
  CollectorServer(const Shard& shard, Listener listener);
  ~CollectorServer();
  CollectorServer(const CollectorServer&) = delete;
  CollectorServer& operator=(const CollectorServer&) = delete;

  static std::unique_ptr<CollectorServer> bind(const Shard& shard, const Endpoint& endpoint);

  Endpoint endpoint() const { return endpoint_; }
  const CopyCounters& counters() const noexcept { return counters_; }
  void stop();

 private:
  void accept_loop();
  void serve(int fd);

  const Shard& shard_;
  Listener listener_;
  Endpoint endpoint_;
  CopyCounters counters_;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::vector<int> open_fds_;
  std::vector<std::jthread> workers_;
  std::jthread acceptor_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{10};
  std::chrono::milliseconds io_timeout{30000};
};

// Collector client. Splits a request by shard, gathers the local slice
// in-process and fetches remote slices concurrently, then returns rows in
// request order. Not thread-safe; use one per client thread.
class Collector {
 public:
  Collector(const TrajectorySchema& schema, std::uint64_t shard_capacity, const Shard* local_shard,
            std::map<std::uint64_t, Endpoint> remotes, RetryPolicy retry = {});

  TrajectoryBatch collect(const CollectionRequest& request);

  const CopyCounters& counters() const noexcept { return counters_; }
  std::uint64_t wire_bytes() const noexcept;

 private:
  struct Remote {
    Endpoint endpoint;
    Socket socket;
    std::uint64_t bytes = 0;
  };

  void fetch(Remote& remote, const ShardSlice& slice, std::span<const std::size_t> column_ids,
             std::span<const GatherTarget> targets);
  void fetch_once(Remote& remote, const ShardSlice& slice, std::span<const std::size_t> column_ids,
                  std::span<const GatherTarget> targets);

  TrajectorySchema schema_;
  std::uint64_t capacity_;
  const Shard* local_;
  std::map<std::uint64_t, Remote> remotes_;
  RetryPolicy retry_;
  CopyCounters counters_;
};

}  // namespace gear
