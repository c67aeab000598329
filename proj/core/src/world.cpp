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

#include "gear/world.hpp"

#include <future>
#include <string>
#include <thread>

#include "gear/error.hpp"
#include "gear/wire.hpp"

namespace gear {

std::vector<std::vector<std::byte>> SoloWorld::gather(std::vector<std::byte> frame) {
  std::vector<std::vector<std::byte>> out;
  out.push_back(std::move(frame));
  return out;
}

std::unique_ptr<TcpWorld> TcpWorld::host(Listener listener, std::uint32_t size, const TcpWorldOptions& options) {
  if (size == 0 || size > 65535) throw Error(Errc::invalid_argument, "world size out of range");
  std::unique_ptr<TcpWorld> world(new TcpWorld(0, size));
  world->peers_.resize(size);
  const auto deadline = std::chrono::steady_clock::now() + options.rendezvous_timeout;
  for (std::uint32_t joined = 1; joined < size;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      throw Error(Errc::timeout, "rendezvous: " + std::to_string(joined - 1) + " of " + std::to_string(size - 1) +
                                     " peers joined");
    }
    Socket s = listener.accept(left);
    if (!s.valid()) continue;
    s.set_timeout(options.io_timeout);
    const auto hello = wire::decode_barrier(wire::read_frame(s));
    if (hello.type != wire::MsgType::barrier_arrive || hello.rank == 0 || hello.rank >= size) {
      throw Error(Errc::protocol, "bad rendezvous hello from rank " + std::to_string(hello.rank));
    }
    if (world->peers_[hello.rank].valid()) {
      throw Error(Errc::protocol, "rank " + std::to_string(hello.rank) + " joined twice");
    }
    world->peers_[hello.rank] = std::move(s);
    ++joined;
  }
  const auto release = wire::encode_barrier(wire::MsgType::barrier_release, 0, 0);
  for (std::uint32_t r = 1; r < size; ++r) world->send(world->peers_[r], release);
  return world;
}

std::unique_ptr<TcpWorld> TcpWorld::join(const Endpoint& root, std::uint32_t rank, std::uint32_t size,
                                         const TcpWorldOptions& options) {
  if (rank == 0 || rank >= size) throw Error(Errc::invalid_argument, "join needs 0 < rank < size");
  std::unique_ptr<TcpWorld> world(new TcpWorld(rank, size));
  const auto deadline = std::chrono::steady_clock::now() + options.rendezvous_timeout;
  auto backoff = std::chrono::milliseconds(5);
  for (;;) {
    try {
      world->root_ = Socket::connect(root);
      break;
    } catch (const Error&) {
      if (std::chrono::steady_clock::now() + backoff > deadline) {
        throw Error(Errc::timeout, "rendezvous: root " + root.to_string() + " unreachable");
      }
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, std::chrono::milliseconds(200));
    }
  }
  world->root_.set_timeout(options.rendezvous_timeout);
  world->send(world->root_, wire::encode_barrier(wire::MsgType::barrier_arrive, static_cast<std::uint16_t>(rank), 0));
  const auto go = wire::decode_barrier(wire::read_frame(world->root_));
  if (go.type != wire::MsgType::barrier_release) throw Error(Errc::protocol, "expected rendezvous release");
  world->root_.set_timeout(options.io_timeout);
  return world;
}

void TcpWorld::send(Socket& s, const std::vector<std::byte>& frame) {
  s.send_all(frame);
  ++messages_;
}

std::vector<std::vector<std::byte>> TcpWorld::gather(std::vector<std::byte> frame) {
  if (rank_ != 0) {
    send(root_, frame);
    return {};
  }
  std::vector<std::vector<std::byte>> out(size_);
  out[0] = std::move(frame);
  for (std::uint32_t r = 1; r < size_; ++r) out[r] = wire::read_frame(peers_[r]);
  return out;
}

std::vector<std::byte> TcpWorld::broadcast(std::vector<std::byte> frame) {
  if (rank_ != 0) return wire::read_frame(root_);
  for (std::uint32_t r = 1; r < size_; ++r) send(peers_[r], frame);
  return frame;
}

void TcpWorld::barrier() {
  ++generation_;
  if (rank_ != 0) {
    send(root_, wire::encode_barrier(wire::MsgType::barrier_arrive, static_cast<std::uint16_t>(rank_), generation_));
    const auto b = wire::decode_barrier(wire::read_frame(root_));
    if (b.type != wire::MsgType::barrier_release || b.generation != generation_) {
      throw Error(Errc::protocol, "barrier generation mismatch");
    }
    return;
  }
  for (std::uint32_t r = 1; r < size_; ++r) {
    const auto b = wire::decode_barrier(wire::read_frame(peers_[r]));
    if (b.type != wire::MsgType::barrier_arrive || b.generation != generation_ || b.rank != r) {
      throw Error(Errc::protocol, "barrier out of order from rank " + std::to_string(r));
    }
  }
  const auto release = wire::encode_barrier(wire::MsgType::barrier_release, 0, generation_);
  for (std::uint32_t r = 1; r < size_; ++r) send(peers_[r], release);
}

WireCounters TcpWorld::counters() const {
  WireCounters c;
  c.messages_sent = messages_;
  auto add = [&c](const Socket& s) {
    c.bytes_sent += s.bytes_sent();
    c.bytes_received += s.bytes_received();
  };
  if (rank_ == 0) {
    for (std::uint32_t r = 1; r < size_; ++r) add(peers_[r]);
  } else {
    add(root_);
  }
  return c;
}

std::vector<std::unique_ptr<World>> loopback_worlds(std::uint32_t size, const TcpWorldOptions& options) {
  std::vector<std::unique_ptr<World>> worlds;
  if (size == 1) {
    worlds.push_back(std::make_unique<SoloWorld>());
    return worlds;
  }
  auto listener = Listener::bind({"127.0.0.1", 0});
  const Endpoint root{"127.0.0.1", listener.port()};
  auto hosted = std::async(std::launch::async,
                           [&listener, size, options] { return TcpWorld::host(std::move(listener), size, options); });
  std::vector<std::future<std::unique_ptr<TcpWorld>>> joins;
  for (std::uint32_t r = 1; r < size; ++r) {
    joins.push_back(std::async(std::launch::async, [root, r, size, options] { return TcpWorld::join(root, r, size, options); }));
  }
  worlds.push_back(hosted.get());
  for (auto& j : joins) worlds.push_back(j.get());
  return worlds;
}

}  // namespace gear
