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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gear/byte_io.hpp"

namespace gear {

enum class DType : std::uint8_t { u8 = 0, i32 = 1, i64 = 2, f32 = 3, f64 = 4 };

std::size_t dtype_size(DType dtype);
std::string_view dtype_name(DType dtype);
DType parse_dtype(std::string_view name);
DType dtype_from_code(std::uint8_t code);

inline constexpr std::size_t kMaxColumnNameBytes = 64;

struct ColumnSpec {
  std::string name;
  DType dtype = DType::u8;
  std::vector<std::uint32_t> shape;

  std::uint64_t elements() const;
  // Bytes of one trajectory's field: product(shape) * sizeof(dtype).
  std::uint64_t block_bytes() const { return elements() * dtype_size(dtype); }

  bool operator==(const ColumnSpec&) const = default;
};

// Ordered, immutable set of fixed-shape columns. One trajectory is one block
// per column.
class TrajectorySchema {
 public:
  explicit TrajectorySchema(std::vector<ColumnSpec> columns);

  // Single u8 column named "data" of the given size.
  static TrajectorySchema synthetic(std::uint64_t block_bytes);

  const std::vector<ColumnSpec>& columns() const noexcept { return columns_; }
  std::size_t size() const noexcept { return columns_.size(); }
  const ColumnSpec& column(std::size_t i) const { return columns_.at(i); }

  std::optional<std::size_t> find(std::string_view name) const noexcept;
  std::size_t index_of(std::string_view name) const;  // throws Errc::unknown_column

  std::uint64_t hash() const noexcept { return hash_; }
  std::uint64_t row_bytes() const noexcept;

  // Column records without table offsets; this byte string is what hash()
  // digests.
  void encode_canonical(bytes::Writer& out) const;

  bool operator==(const TrajectorySchema& other) const { return columns_ == other.columns_; }

 private:
  std::vector<ColumnSpec> columns_;
  std::uint64_t hash_ = 0;
};

}  // namespace gear
