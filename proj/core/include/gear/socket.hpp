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

#include <sys/uio.h>

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace gear {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  static Endpoint parse(std::string_view text);  // "host:port"
  std::string to_string() const { return host + ":" + std::to_string(port); }
  bool operator==(const Endpoint&) const = default;
};

// Blocking stream socket. Every send/recv loops until the full span moved or
// throws Errc::io / Errc::timeout.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  static Socket connect(const Endpoint& endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(5));

  void send_all(std::span<const std::byte> data);
  // Gather-send straight from caller memory; no staging copy.
  void send_iov(std::span<iovec> iov);
  void recv_all(std::span<std::byte> data);
  // Scatter-receive straight into caller memory.
  void recv_iov(std::span<iovec> iov);

  void set_timeout(std::chrono::milliseconds timeout);
  void set_nodelay();
  void shutdown() noexcept;
  void close() noexcept;
  int release() noexcept;
  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }

  std::uint64_t bytes_sent() const noexcept { return sent_; }
  std::uint64_t bytes_received() const noexcept { return received_; }

 private:
  int fd_ = -1;
  std::uint64_t sent_ = 0;
  std::uint64_t received_ = 0;
};

class Listener {
 public:
  Listener() = default;
  ~Listener() { close(); }
  Listener(Listener&& other) noexcept;
  Listener& operator=(Listener&& other) noexcept;
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  // Port 0 picks an ephemeral port.
  static Listener bind(const Endpoint& endpoint, int backlog = 128);

  // Returns an invalid socket on timeout.
  Socket accept(std::chrono::milliseconds timeout);
  Endpoint endpoint() const { return endpoint_; }
  std::uint16_t port() const noexcept { return endpoint_.port; }
  int fd() const noexcept { return fd_; }
  void close() noexcept;

 private:
  int fd_ = -1;
  Endpoint endpoint_;
};

}  // namespace gear
