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

#include "gear/schema.hpp"

#include <limits>
#include <unordered_set>

#include "gear/error.hpp"

namespace gear {

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::u8: return 1;
    case DType::i32: return 4;
    case DType::i64: return 8;
    case DType::f32: return 4;
    case DType::f64: return 8;
  }
  throw Error(Errc::format, "bad dtype code " + std::to_string(static_cast<int>(dtype)));
}

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::u8: return "u8";
    case DType::i32: return "i32";
    case DType::i64: return "i64";
    case DType::f32: return "f32";
    case DType::f64: return "f64";
  }
  return "?";
}

DType parse_dtype(std::string_view name) {
  for (auto d : {DType::u8, DType::i32, DType::i64, DType::f32, DType::f64}) {
    if (dtype_name(d) == name) return d;
  }
  throw Error(Errc::invalid_argument, "unknown dtype '" + std::string(name) + "'");
}

DType dtype_from_code(std::uint8_t code) {
  if (code > static_cast<std::uint8_t>(DType::f64)) {
    throw Error(Errc::format, "bad dtype code " + std::to_string(code));
  }
  return static_cast<DType>(code);
}

std::uint64_t ColumnSpec::elements() const {
  std::uint64_t n = 1;
  for (auto extent : shape) {
    if (extent == 0) {
      throw Error(Errc::invalid_argument, "column '" + name + "' has a zero extent");
    }
    if (n > std::numeric_limits<std::uint64_t>::max() / extent) {
      throw Error(Errc::invalid_argument, "column '" + name + "' shape overflows");
    }
    n *= extent;
  }
  return n;
}

TrajectorySchema::TrajectorySchema(std::vector<ColumnSpec> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) {
    throw Error(Errc::invalid_argument, "schema needs at least one column");
  }
  if (columns_.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(Errc::invalid_argument, "too many columns");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& c : columns_) {
    if (c.name.empty() || c.name.size() > kMaxColumnNameBytes) {
      throw Error(Errc::invalid_argument, "column name must be 1.." +
                                              std::to_string(kMaxColumnNameBytes) + " bytes");
    }
    if (!seen.insert(c.name).second) {
      throw Error(Errc::invalid_argument, "duplicate column '" + c.name + "'");
    }
    if (c.shape.size() > std::numeric_limits<std::uint8_t>::max()) {
      throw Error(Errc::invalid_argument, "column '" + c.name + "' has too many dimensions");
    }
    (void)dtype_size(c.dtype);
    if (c.block_bytes() == 0) {
      throw Error(Errc::invalid_argument, "column '" + c.name + "' has empty blocks");
    }
  }
  std::vector<std::byte> canon;
  bytes::Writer w(canon);
  encode_canonical(w);
  hash_ = bytes::fnv1a(canon);
}

TrajectorySchema TrajectorySchema::synthetic(std::uint64_t block_bytes) {
  if (block_bytes == 0 || block_bytes > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::invalid_argument, "synthetic block size out of range");
  }
  return TrajectorySchema({ColumnSpec{"data", DType::u8, {static_cast<std::uint32_t>(block_bytes)}}});
}

std::optional<std::size_t> TrajectorySchema::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t TrajectorySchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(Errc::unknown_column, "'" + std::string(name) + "'");
}

std::uint64_t TrajectorySchema::row_bytes() const noexcept {
  std::uint64_t total = 0;
  for (const auto& c : columns_) total += c.block_bytes();
  return total;
}

void TrajectorySchema::encode_canonical(bytes::Writer& out) const {
  out.put(static_cast<std::uint16_t>(columns_.size()));
  for (const auto& c : columns_) {
    out.put(static_cast<std::uint8_t>(c.name.size()));
    out.put_string(c.name);
    out.put(static_cast<std::uint8_t>(c.dtype));
    out.put(static_cast<std::uint8_t>(c.shape.size()));
    for (auto extent : c.shape) out.put(extent);
  }
}

}  // namespace gear
