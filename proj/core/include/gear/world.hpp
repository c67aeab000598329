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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "gear/socket.hpp"

namespace gear {

struct WireCounters {
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t messages_sent = 0;
};

// SPMD collective group. Rank 0 is the central node. Every rank must call the
// same collectives in the same order; collectives never overlap.
class World {
 public:
  virtual ~World() = default;

  virtual std::uint32_t rank() const = 0;
  virtual std::uint32_t size() const = 0;
  bool is_root() const { return rank() == 0; }

  // Root gets every rank's frame in rank order (its own first); others get
  // an empty list.
  virtual std::vector<std::vector<std::byte>> gather(std::vector<std::byte> frame) = 0;
  // Root's frame is returned on every rank. Non-root arguments are ignored.
  virtual std::vector<std::byte> broadcast(std::vector<std::byte> frame) = 0;
  virtual void barrier() = 0;
  virtual WireCounters counters() const = 0;
};

// Degenerate single-rank world; collectives are no-ops.
class SoloWorld final : public World {
 public:
  std::uint32_t rank() const override { return 0; }
  std::uint32_t size() const override { return 1; }
  std::vector<std::vector<std::byte>> gather(std::vector<std::byte> frame) override;
  std::vector<std::byte> broadcast(std::vector<std::byte> frame) override { return frame; }
  void barrier() override {}
  WireCounters counters() const override { return {}; }
};

struct TcpWorldOptions {
  std::chrono::milliseconds rendezvous_timeout{30000};
  std::chrono::milliseconds io_timeout{120000};
};

// Star topology over stream sockets: every rank holds one connection to the
// root. Frames are wire messages 3..7; barriers use 5/6.
class TcpWorld final : public World {
 public:
  static std::unique_ptr<TcpWorld> host(Listener listener, std::uint32_t size, const TcpWorldOptions& options = {});
  static std::unique_ptr<TcpWorld> join(const Endpoint& root, std::uint32_t rank, std::uint32_t size,
                                        const TcpWorldOptions& options = {});

  std::uint32_t rank() const override { return rank_; }
  std::uint32_t size() const override { return size_; }
  std::vector<std::vector<std::byte>> gather(std::vector<std::byte> frame) override;
  std::vector<std::byte> broadcast(std::vector<std::byte> frame) override;
  void barrier() override;
  WireCounters counters() const override;

 private:
  TcpWorld(std::uint32_t rank, std::uint32_t size) : rank_(rank), size_(size) {}

  void send(Socket& s, const std::vector<std::byte>& frame);

  std::uint32_t rank_;
  std::uint32_t size_;
  std::vector<Socket> peers_;  // root only, indexed by rank (slot 0 unused)
  Socket root_;                // non-root only
  std::uint32_t generation_ = 0;
  std::uint64_t messages_ = 0;
};

// Builds a connected loopback world of 'size' ranks inside one process (one
// World per rank, each to be driven from its own thread).
std::vector<std::unique_ptr<World>> loopback_worlds(std::uint32_t size, const TcpWorldOptions& options = {});

}  // namespace gear
