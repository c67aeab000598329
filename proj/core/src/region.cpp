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

#include "gear/region.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

#include "gear/error.hpp"

namespace gear {
namespace {

std::string shm_path(const std::string& name) {
  if (name.empty() || name.find('/') != std::string::npos) {
    throw Error(Errc::invalid_argument, "region name must be non-empty and contain no '/'");
  }
  return "/" + name;
}

[[noreturn]] void fail(const std::string& what) {
  throw Error(Errc::region, what + ": " + std::strerror(errno));
}

std::byte* map(int fd, std::size_t size) {
  void* p = ::mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  if (p == MAP_FAILED) fail("mmap");
  return static_cast<std::byte*>(p);
}

}  // namespace

Region::~Region() { reset(); }

Region::Region(Region&& other) noexcept
    : base_(std::exchange(other.base_, nullptr)),
      size_(std::exchange(other.size_, 0)),
      name_(std::move(other.name_)),
      owner_pid_(std::exchange(other.owner_pid_, 0)) {
  other.name_.clear();
}

Region& Region::operator=(Region&& other) noexcept {
  if (this != &other) {
    reset();
    base_ = std::exchange(other.base_, nullptr);
    size_ = std::exchange(other.size_, 0);
    name_ = std::move(other.name_);
    other.name_.clear();
    owner_pid_ = std::exchange(other.owner_pid_, 0);
  }
  return *this;
}

void Region::reset() noexcept {
  if (base_ != nullptr) ::munmap(base_, size_);
  if (!name_.empty() && owner_pid_ != 0 && owner_pid_ == ::getpid()) {
    ::shm_unlink(("/" + name_).c_str());
  }
  base_ = nullptr;
  size_ = 0;
  name_.clear();
  owner_pid_ = 0;
}

Region Region::create_shared(const std::string& name, std::size_t size) {
  if (size == 0) throw Error(Errc::invalid_argument, "region size must be positive");
  const auto path = shm_path(name);
  int fd = ::shm_open(path.c_str(), O_CREAT | O_EXCL | O_RDWR, 0600);
  if (fd < 0) fail("shm_open(" + name + ")");
  if (::ftruncate(fd, static_cast<off_t>(size)) != 0) {
    int saved = errno;
    ::close(fd);
    ::shm_unlink(path.c_str());
    errno = saved;
    fail("ftruncate(" + name + ")");
  }
  std::byte* base = nullptr;
  try {
    base = map(fd, size);
  } catch (...) {
    ::close(fd);
    ::shm_unlink(path.c_str());
    throw;
  }
  ::close(fd);
  Region r;
  r.base_ = base;
  r.size_ = size;
  r.name_ = name;
  r.owner_pid_ = ::getpid();
  return r;
}

Region Region::open_shared(const std::string& name) {
  const auto path = shm_path(name);
  int fd = ::shm_open(path.c_str(), O_RDWR, 0600);
  if (fd < 0) fail("shm_open(" + name + ")");
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    fail("fstat(" + name + ")");
  }
  if (st.st_size <= 0) {
    ::close(fd);
    throw Error(Errc::region, "region '" + name + "' is empty");
  }
  std::byte* base = nullptr;
  try {
    base = map(fd, static_cast<std::size_t>(st.st_size));
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  Region r;
  r.base_ = base;
  r.size_ = static_cast<std::size_t>(st.st_size);
  r.name_ = name;
  return r;
}

Region Region::create_private(std::size_t size) {
  if (size == 0) throw Error(Errc::invalid_argument, "region size must be positive");
  void* p = ::mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
  if (p == MAP_FAILED) fail("mmap(private)");
  Region r;
  r.base_ = static_cast<std::byte*>(p);
  r.size_ = size;
  return r;
}

bool Region::exists(const std::string& name) noexcept {
  int fd = ::shm_open(("/" + name).c_str(), O_RDONLY, 0);
  if (fd < 0) return false;
  ::close(fd);
  return true;
}

void Region::unlink(const std::string& name) noexcept { ::shm_unlink(("/" + name).c_str()); }

}  // namespace gear
