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

#include <cstddef>
#include <span>
#include <string>

namespace gear {

// A mapped memory region: either a named POSIX shared-memory object that other
// processes can map, or an anonymous private mapping. Zero-filled on creation.
class Region {
 public:
  Region() = default;
  ~Region();
  Region(Region&& other) noexcept;
  Region& operator=(Region&& other) noexcept;
  Region(const Region&) = delete;
  Region& operator=(const Region&) = delete;

  // Fails if the name is already in use.
  static Region create_shared(const std::string& name, std::size_t size);
  static Region open_shared(const std::string& name);
  static Region create_private(std::size_t size);

  static bool exists(const std::string& name) noexcept;
  static void unlink(const std::string& name) noexcept;

  std::span<std::byte> bytes() noexcept { return {base_, size_}; }
  std::span<const std::byte> bytes() const noexcept { return {base_, size_}; }
  std::byte* data() noexcept { return base_; }
  const std::byte* data() const noexcept { return base_; }
  std::size_t size() const noexcept { return size_; }

  bool is_shared() const noexcept { return !name_.empty(); }
  const std::string& name() const noexcept { return name_; }

  // The creating process unlinks the name on destruction unless released.
  void release_ownership() noexcept { owner_pid_ = 0; }

 private:
  void reset() noexcept;

  std::byte* base_ = nullptr;
  std::size_t size_ = 0;
  std::string name_;
  pid_t owner_pid_ = 0;
};

}  // namespace gear
