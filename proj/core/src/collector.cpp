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

#include "gear/collector.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <exception>

#include "gear/byte_io.hpp"
#include "gear/error.hpp"
#include "gear/wire.hpp"

namespace gear {
namespace {

std::string describe(std::span<const std::uint64_t> indices) {
  std::string s;
  for (std::size_t i = 0; i < indices.size() && i < 8; ++i) s += (i ? "," : "") + std::to_string(indices[i]);
  if (indices.size() > 8) s += ",...";
  return s;
}

[[noreturn]] void throw_stale(std::vector<std::uint64_t> global) {
  auto what = std::to_string(global.size()) + " stale row(s): " + describe(global);
  throw StaleIndexError(std::move(global), what);
}

// Epochs of rows that are COMMITTED and not mid-update; out-of-range or
// uncommitted rows go to 'stale' as local indices.
std::vector<std::uint64_t> stable_epochs(const Shard& shard, std::span<const std::uint64_t> local,
                                         std::vector<std::uint64_t>& stale) {
  const auto status = shard.status();
  std::vector<std::uint64_t> epochs(local.size(), 0);
  for (std::size_t i = 0; i < local.size(); ++i) {
    const auto idx = local[i];
    if (idx >= shard.capacity()) {
      stale.push_back(idx);
      continue;
    }
    const auto e = status.raw_epoch(idx);
    if ((e & 1) != 0 || status.state(idx) != IndexState::committed) {
      stale.push_back(idx);
      continue;
    }
    epochs[i] = e;
  }
  return epochs;
}

std::vector<std::uint64_t> changed_since(const Shard& shard, std::span<const std::uint64_t> local,
                                         std::span<const std::uint64_t> epochs) {
  std::atomic_thread_fence(std::memory_order_acquire);
  const auto status = shard.status();
  std::vector<std::uint64_t> changed;
  for (std::size_t i = 0; i < local.size(); ++i) {
    if (status.raw_epoch(local[i]) != epochs[i]) changed.push_back(local[i]);
  }
  return changed;
}

std::vector<std::uint64_t> to_global(const Shard& shard, std::span<const std::uint64_t> local) {
  std::vector<std::uint64_t> out;
  out.reserve(local.size());
  for (auto l : local) out.push_back(shard.shard_id() * shard.capacity() + l);
  return out;
}

}  // namespace

const TrajectoryBatch::Column& TrajectoryBatch::column(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.spec.name == name) return c;
  }
  throw Error(Errc::unknown_column, "'" + std::string(name) + "' not in batch");
}

std::span<const std::byte> TrajectoryBatch::row(std::size_t column, std::size_t r) const {
  const auto& c = columns_.at(column);
  if (r >= rows_) throw Error(Errc::out_of_range, "row " + std::to_string(r));
  const auto bytes = c.spec.block_bytes();
  return c.data.span().subspan(r * bytes, bytes);
}

std::uint64_t TrajectoryBatch::total_bytes() const noexcept {
  std::uint64_t total = 0;
  for (const auto& c : columns_) total += c.data.size();
  return total;
}

void gather_into(const Shard& shard, std::span<const std::uint64_t> local_indices,
                 std::span<const std::size_t> positions, std::span<const std::size_t> column_ids,
                 std::span<const GatherTarget> targets, CopyCounters* counters) {
  if (column_ids.size() != targets.size()) throw Error(Errc::invalid_argument, "one target per column");
  if (!positions.empty() && positions.size() != local_indices.size()) {
    throw Error(Errc::invalid_argument, "positions must match indices");
  }
  for (auto c : column_ids) {
    if (c >= shard.schema().size()) throw Error(Errc::unknown_column, "column id " + std::to_string(c));
  }

  std::vector<std::uint64_t> stale;
  const auto epochs = stable_epochs(shard, local_indices, stale);
  if (!stale.empty()) throw_stale(to_global(shard, stale));

  auto copy_column = [&](std::size_t k) {
    const auto col = column_ids[k];
    const auto bytes = shard.schema().column(col).block_bytes();
    const auto& t = targets[k];
    for (std::size_t i = 0; i < local_indices.size(); ++i) {
      const auto pos = positions.empty() ? i : positions[i];
      std::memcpy(t.base + pos * t.row_stride, shard.block(col, local_indices[i]).data(), bytes);
    }
  };
  if (column_ids.size() == 1) {
    copy_column(0);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t k = 1; k < column_ids.size(); ++k) workers.emplace_back(copy_column, k);
    copy_column(0);
  }

  auto changed = changed_since(shard, local_indices, epochs);
  if (!changed.empty()) throw_stale(to_global(shard, changed));
  if (counters != nullptr) counters->local_block_copies += local_indices.size() * column_ids.size();
}

std::vector<Buffer> gather_local(const Shard& shard, std::span<const std::uint64_t> local_indices,
                                 std::span<const std::string> columns, CopyCounters* counters) {
  if (columns.empty()) throw Error(Errc::invalid_argument, "no columns requested");
  std::vector<std::size_t> ids;
  std::vector<Buffer> out;
  std::vector<GatherTarget> targets;
  for (const auto& name : columns) {
    const auto id = shard.schema().index_of(name);
    const auto bytes = shard.schema().column(id).block_bytes();
    ids.push_back(id);
    out.emplace_back(local_indices.size() * bytes);
    targets.push_back({out.back().data(), bytes});
  }
  gather_into(shard, local_indices, {}, ids, targets, counters);
  return out;
}

// ---------------------------------------------------------------------------
// Server

CollectorServer::CollectorServer(const Shard& shard, Listener listener)
    : shard_(shard), listener_(std::move(listener)), endpoint_(listener_.endpoint()) {
  if (endpoint_.host == "0.0.0.0") endpoint_.host = "127.0.0.1";
  acceptor_ = std::jthread([this] { accept_loop(); });
}

CollectorServer::~CollectorServer() { stop(); }

std::unique_ptr<CollectorServer> CollectorServer::bind(const Shard& shard, const Endpoint& endpoint) {
  return std::make_unique<CollectorServer>(shard, Listener::bind(endpoint));
}

void CollectorServer::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_.exchange(true)) return;
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::jthread> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  workers.clear();
  listener_.close();
}

void CollectorServer::accept_loop() {
  while (!stopping_.load()) {
    Socket s;
    try {
      s = listener_.accept(std::chrono::milliseconds(50));
    } catch (const Error&) {
      continue;
    }
    if (!s.valid()) continue;
    std::lock_guard lock(mu_);
    if (stopping_.load()) break;
    const int fd = s.release();
    open_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void CollectorServer::serve(int fd) {
  Socket s(fd);
  const auto& schema = shard_.schema();
  try {
    for (;;) {
      const auto req = wire::read_collect_request(s);
      if (req.shard_id != shard_.shard_id()) {
        s.send_all(wire::encode_response_header(wire::CollectStatus::bad_shard, 0));
        continue;
      }
      const bool bad_column = std::any_of(req.column_ids.begin(), req.column_ids.end(),
                                          [&](std::uint16_t c) { return c >= schema.size(); });
      if (bad_column) {
        s.send_all(wire::encode_response_header(wire::CollectStatus::bad_column, 0));
        continue;
      }
      std::vector<std::uint64_t> stale;
      const auto epochs = stable_epochs(shard_, req.indices, stale);
      if (!stale.empty()) {
        std::vector<std::byte> out;
        bytes::Writer w(out);
        const auto h = wire::encode_response_header(wire::CollectStatus::stale_index, 0);
        w.put_bytes(h).put(static_cast<std::uint32_t>(stale.size()));
        for (auto i : stale) w.put(i);
        s.send_all(out);
        continue;
      }

      const auto header = wire::encode_response_header(wire::CollectStatus::ok,
                                                       static_cast<std::uint16_t>(req.column_ids.size()));
      std::vector<std::array<std::byte, wire::kColumnHeaderBytes>> col_headers;
      col_headers.reserve(req.column_ids.size());
      std::vector<iovec> iov;
      iov.reserve(1 + req.column_ids.size() * (1 + req.indices.size()));
      iov.push_back({const_cast<std::byte*>(header.data()), header.size()});
      for (auto c : req.column_ids) {
        const auto bytes = schema.column(c).block_bytes();
        col_headers.push_back(wire::encode_column_header(c, bytes * req.indices.size()));
        iov.push_back({col_headers.back().data(), col_headers.back().size()});
        for (auto idx : req.indices) {
          iov.push_back({const_cast<std::byte*>(shard_.block(c, idx).data()), bytes});
        }
      }
      // Hold back the final row; if any row changed while being sent, drop
      // the connection so the client never sees a complete torn response.
      std::span<iovec> all(iov);
      s.send_iov(all.first(iov.size() - 1));
      if (!changed_since(shard_, req.indices, epochs).empty()) {
        ++counters_.aborted_responses;
        break;
      }
      s.send_iov(all.last(1));
      counters_.remote_send_copies += req.indices.size() * req.column_ids.size();
    }
  } catch (const Error&) {
    // peer closed, timed out or sent garbage
  }
  std::lock_guard lock(mu_);
  open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), fd), open_fds_.end());
  s.close();
}

// ---------------------------------------------------------------------------
// Client

Collector::Collector(const TrajectorySchema& schema, std::uint64_t shard_capacity, const Shard* local_shard,
                     std::map<std::uint64_t, Endpoint> remotes, RetryPolicy retry)
    : schema_(schema), capacity_(shard_capacity), local_(local_shard), retry_(retry) {
  if (capacity_ == 0) throw Error(Errc::invalid_argument, "capacity must be positive");
  if (local_ != nullptr && (local_->capacity() != capacity_ || local_->schema().hash() != schema_.hash())) {
    throw Error(Errc::invalid_argument, "local shard disagrees with the collector's schema or capacity");
  }
  for (auto& [id, ep] : remotes) remotes_[id].endpoint = ep;
}

std::uint64_t Collector::wire_bytes() const noexcept {
  std::uint64_t total = 0;
  for (const auto& [id, r] : remotes_) total += r.bytes + r.socket.bytes_sent() + r.socket.bytes_received();
  return total;
}

void Collector::fetch_once(Remote& remote, const ShardSlice& slice, std::span<const std::size_t> column_ids,
                           std::span<const GatherTarget> targets) {
  if (!remote.socket.valid()) {
    remote.socket = Socket::connect(remote.endpoint);
    remote.socket.set_timeout(retry_.io_timeout);
  }
  auto& s = remote.socket;
  wire::CollectRequest req;
  req.shard_id = static_cast<std::uint16_t>(slice.shard_id);
  req.indices = slice.local_indices;
  for (auto c : column_ids) req.column_ids.push_back(static_cast<std::uint16_t>(c));
  s.send_all(wire::encode_collect_request(req));
  ++counters_.remote_requests;

  std::array<std::byte, wire::kResponseHeaderBytes> hbuf{};
  s.recv_all(hbuf);
  const auto header = wire::decode_response_header(hbuf);
  switch (header.status) {
    case wire::CollectStatus::ok: break;
    case wire::CollectStatus::stale_index: {
      std::array<std::byte, 4> nbuf{};
      s.recv_all(nbuf);
      std::vector<std::byte> list(8ULL * bytes::load_le<std::uint32_t>(nbuf.data()));
      s.recv_all(list);
      std::vector<std::uint64_t> global;
      for (std::size_t i = 0; i < list.size(); i += 8) {
        global.push_back(slice.shard_id * capacity_ + bytes::load_le<std::uint64_t>(list.data() + i));
      }
      throw_stale(std::move(global));
    }
    case wire::CollectStatus::bad_shard:
      throw Error(Errc::protocol, remote.endpoint.to_string() + " does not serve shard " + std::to_string(slice.shard_id));
    case wire::CollectStatus::bad_column:
      throw Error(Errc::protocol, remote.endpoint.to_string() + " rejected the column list");
  }
  if (header.num_columns != column_ids.size()) throw Error(Errc::protocol, "column count mismatch");

  std::vector<iovec> iov(slice.local_indices.size());
  for (std::size_t k = 0; k < column_ids.size(); ++k) {
    std::array<std::byte, wire::kColumnHeaderBytes> cbuf{};
    s.recv_all(cbuf);
    const auto [id, len] = wire::decode_column_header(cbuf);
    const auto bytes = schema_.column(column_ids[k]).block_bytes();
    if (id != column_ids[k] || len != bytes * slice.local_indices.size()) {
      throw Error(Errc::protocol, "unexpected column payload header");
    }
    for (std::size_t i = 0; i < iov.size(); ++i) {
      iov[i] = {targets[k].base + slice.positions[i] * targets[k].row_stride, bytes};
    }
    s.recv_iov(iov);
    counters_.remote_recv_copies += slice.local_indices.size();
  }
}

void Collector::fetch(Remote& remote, const ShardSlice& slice, std::span<const std::size_t> column_ids,
                      std::span<const GatherTarget> targets) {
  auto backoff = retry_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      fetch_once(remote, slice, column_ids, targets);
      return;
    } catch (const StaleIndexError&) {
      throw;
    } catch (const Error& e) {
      if (e.code() != Errc::io && e.code() != Errc::timeout && e.code() != Errc::unreachable) throw;
      remote.bytes += remote.socket.bytes_sent() + remote.socket.bytes_received();
      remote.socket = Socket();
      if (attempt >= retry_.attempts) {
        throw Error(Errc::unreachable, "shard " + std::to_string(slice.shard_id) + " at " +
                                           remote.endpoint.to_string() + " failed after " + std::to_string(attempt) +
                                           " attempts: " + e.what());
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
}

TrajectoryBatch Collector::collect(const CollectionRequest& request) {
  if (request.global_indices.empty()) throw Error(Errc::invalid_argument, "no indices requested");
  if (request.columns.empty()) throw Error(Errc::invalid_argument, "no columns requested");

  TrajectoryBatch batch;
  batch.rows_ = request.global_indices.size();
  std::vector<std::size_t> ids;
  std::vector<GatherTarget> targets;
  for (const auto& name : request.columns) {
    const auto id = schema_.index_of(name);
    const auto& spec = schema_.column(id);
    ids.push_back(id);
    batch.columns_.push_back({spec, id, Buffer(batch.rows_ * spec.block_bytes())});
  }
  for (auto& c : batch.columns_) targets.push_back({c.data.data(), c.spec.block_bytes()});

  const auto slices = translate(request.global_indices, capacity_);
  const ShardSlice* local_slice = nullptr;
  std::vector<std::pair<Remote*, const ShardSlice*>> remote_jobs;
  for (const auto& slice : slices) {
    if (local_ != nullptr && slice.shard_id == local_->shard_id()) {
      local_slice = &slice;
      continue;
    }
    auto it = remotes_.find(slice.shard_id);
    if (it == remotes_.end()) throw Error(Errc::unreachable, "no route to shard " + std::to_string(slice.shard_id));
    remote_jobs.emplace_back(&it->second, &slice);
  }

  std::vector<std::exception_ptr> errors(remote_jobs.size() + 1);
  {
    std::vector<std::jthread> threads;
    for (std::size_t j = 0; j < remote_jobs.size(); ++j) {
      auto run = [&, j] {
        try {
          fetch(*remote_jobs[j].first, *remote_jobs[j].second, ids, targets);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      };
      // The last remote job runs inline when nothing is local.
      if (j + 1 == remote_jobs.size() && local_slice == nullptr) {
        run();
      } else {
        threads.emplace_back(run);
      }
    }
    if (local_slice != nullptr) {
      try {
        gather_into(*local_, local_slice->local_indices, local_slice->positions, ids, targets, &counters_);
      } catch (...) {
        errors.back() = std::current_exception();
      }
    }
  }

  std::vector<std::uint64_t> stale;
  std::exception_ptr first_other;
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const StaleIndexError& s) {
      stale.insert(stale.end(), s.indices().begin(), s.indices().end());
    } catch (...) {
      if (!first_other) first_other = std::current_exception();
    }
  }
  if (first_other) std::rethrow_exception(first_other);
  if (!stale.empty()) {
    std::sort(stale.begin(), stale.end());
    throw_stale(std::move(stale));
  }
  return batch;
}

}  // namespace gear
