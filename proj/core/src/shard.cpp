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

#include "gear/shard.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "gear/byte_io.hpp"
#include "gear/error.hpp"

namespace gear {
namespace {

constexpr std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }

std::size_t encoded_header_bytes(const TrajectorySchema& schema) {
  std::size_t n = 4 + 1 + 3 + 8 + 8 + 2;
  for (const auto& c : schema.columns()) n += 1 + c.name.size() + 1 + 1 + 4 * c.shape.size() + 8;
  return n;
}

}  // namespace

std::string shard_region_name(std::string_view cluster_id, std::uint32_t shard_id) {
  return "gear.shard." + std::string(cluster_id) + "." + std::to_string(shard_id);
}

ShardLayout ShardLayout::compute(const TrajectorySchema& schema, std::uint64_t capacity,
                                 std::uint32_t partitions) {
  ShardLayout layout;
  layout.header_bytes = encoded_header_bytes(schema);
  std::uint64_t offset = align_up(layout.header_bytes, kBlockAlignment);
  for (const auto& c : schema.columns()) {
    const auto aligned = align_up(c.block_bytes(), kBlockAlignment);
    layout.table_offsets.push_back(offset);
    layout.aligned_block_bytes.push_back(aligned);
    offset += aligned * capacity;
  }
  layout.status_offset = offset;
  offset += kStatusRecordBytes * capacity;
  layout.allocator_offset = align_up(offset, kBlockAlignment);
  layout.total_bytes = layout.allocator_offset + AllocatorSection::bytes(capacity, partitions);
  return layout;
}

void encode_header(bytes::Writer& out, const TrajectorySchema& schema, std::uint64_t capacity,
                   std::span<const std::uint64_t> table_offsets) {
  out.put(kShardMagic).put(kFormatVersion).pad(3);
  out.put(schema.hash()).put(capacity);
  out.put(static_cast<std::uint16_t>(schema.size()));
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& c = schema.column(i);
    out.put(static_cast<std::uint8_t>(c.name.size())).put_string(c.name);
    out.put(static_cast<std::uint8_t>(c.dtype)).put(static_cast<std::uint8_t>(c.shape.size()));
    for (auto e : c.shape) out.put(e);
    out.put(i < table_offsets.size() ? table_offsets[i] : std::uint64_t{0});
  }
}

ShardHeader decode_header(std::span<const std::byte> data) {
  bytes::Reader in(data);
  ShardHeader h;
  h.magic = in.get<std::uint32_t>();
  if (h.magic != kShardMagic) throw Error(Errc::format, "bad magic");
  h.version = in.get<std::uint8_t>();
  if (h.version != kFormatVersion) {
    throw Error(Errc::format, "unsupported format version " + std::to_string(h.version));
  }
  in.skip(3);
  h.schema_hash = in.get<std::uint64_t>();
  h.capacity = in.get<std::uint64_t>();
  const auto ncols = in.get<std::uint16_t>();
  for (std::uint16_t i = 0; i < ncols; ++i) {
    ColumnSpec c;
    c.name = in.get_string(in.get<std::uint8_t>());
    c.dtype = dtype_from_code(in.get<std::uint8_t>());
    const auto ndim = in.get<std::uint8_t>();
    for (std::uint8_t d = 0; d < ndim; ++d) c.shape.push_back(in.get<std::uint32_t>());
    h.columns.push_back(std::move(c));
    h.table_offsets.push_back(in.get<std::uint64_t>());
  }
  h.encoded_bytes = in.position();
  const TrajectorySchema schema(h.columns);
  if (schema.hash() != h.schema_hash) throw Error(Errc::format, "schema hash mismatch");
  return h;
}

Shard Shard::create(const TrajectorySchema& schema, std::uint64_t capacity, std::uint32_t shard_id,
                    const ShardOptions& options) {
  if (capacity == 0) throw Error(Errc::invalid_argument, "capacity must be positive");
  if (options.partitions == 0 || options.partitions > capacity) {
    throw Error(Errc::invalid_argument, "partitions must be in [1, capacity]");
  }
  if (schema.row_bytes() > options.memory_budget / capacity) {
    throw Error(Errc::budget, "capacity x row bytes exceeds the memory budget");
  }
  auto layout = ShardLayout::compute(schema, capacity, options.partitions);
  if (layout.total_bytes > options.memory_budget) {
    throw Error(Errc::budget, std::to_string(layout.total_bytes) + " bytes exceeds the memory budget");
  }
  Region region = options.backing == Backing::shared_region
                      ? Region::create_shared(options.region_name, layout.total_bytes)
                      : Region::create_private(layout.total_bytes);

  std::vector<std::byte> header;
  bytes::Writer w(header);
  encode_header(w, schema, capacity, layout.table_offsets);
  std::memcpy(region.data(), header.data(), header.size());
  AllocatorSection::initialize(region.data() + layout.allocator_offset, capacity, options.partitions, shard_id);
  return Shard(std::move(region), schema, capacity, std::move(layout));
}

Shard Shard::from_region(Region region) {
  const auto h = decode_header(region.bytes());
  if (h.capacity == 0) throw Error(Errc::format, "zero capacity");
  TrajectorySchema schema(h.columns);
  // Partition count sits at a fixed spot once schema and capacity are known.
  auto probe = ShardLayout::compute(schema, h.capacity, 1);
  if (region.size() < probe.allocator_offset + AllocatorSection::kHeaderBytes) {
    throw Error(Errc::format, "region truncated before allocator section");
  }
  const auto partitions = AllocatorSection::read_partition_count(region.data() + probe.allocator_offset);
  if (partitions == 0 || partitions > h.capacity) throw Error(Errc::format, "bad partition count");
  auto layout = ShardLayout::compute(schema, h.capacity, partitions);
  if (region.size() != layout.total_bytes) {
    throw Error(Errc::format, "region is " + std::to_string(region.size()) + " bytes, layout needs " +
                                  std::to_string(layout.total_bytes));
  }
  if (h.table_offsets != layout.table_offsets) throw Error(Errc::format, "table offsets disagree with layout");
  return Shard(std::move(region), std::move(schema), h.capacity, std::move(layout));
}

Shard Shard::open(const std::string& region_name) { return from_region(Region::open_shared(region_name)); }

Shard Shard::open(const std::string& region_name, const TrajectorySchema& expected) {
  auto shard = open(region_name);
  if (shard.schema().hash() != expected.hash()) {
    throw Error(Errc::format, "schema hash mismatch opening '" + region_name + "'");
  }
  return shard;
}

void Shard::checkpoint(const std::filesystem::path& path) const {
  const auto st = status();
  for (std::uint64_t i = 0; i < capacity_; ++i) {
    if (st.state(i) == IndexState::writing) {
      throw Error(Errc::state, "index " + std::to_string(i) + " is WRITING; checkpoint needs a quiescent shard");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(region_.data()), static_cast<std::streamsize>(region_.size()));
  out.flush();
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

Shard Shard::restore(const std::filesystem::path& path, const ShardOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.empty()) throw Error(Errc::format, "empty checkpoint " + path.string());
  if (raw.size() > options.memory_budget) throw Error(Errc::budget, "checkpoint exceeds the memory budget");
  // Validate before allocating a region so bad files never leave a name behind.
  {
    auto scratch = Region::create_private(raw.size());
    std::memcpy(scratch.data(), raw.data(), raw.size());
    (void)from_region(std::move(scratch));
  }
  Region region = options.backing == Backing::shared_region
                      ? Region::create_shared(options.region_name, raw.size())
                      : Region::create_private(raw.size());
  std::memcpy(region.data(), raw.data(), raw.size());
  return from_region(std::move(region));
}

void Shard::check_index(std::size_t column, std::uint64_t local_index) const {
  if (column >= schema_.size()) throw Error(Errc::unknown_column, "column id " + std::to_string(column));
  if (local_index >= capacity_) {
    throw Error(Errc::out_of_range, "index " + std::to_string(local_index) + " >= capacity " +
                                        std::to_string(capacity_));
  }
}

std::span<std::byte> Shard::block(std::size_t column, std::uint64_t local_index) {
  check_index(column, local_index);
  return {base() + layout_.table_offsets[column] + local_index * layout_.aligned_block_bytes[column],
          schema_.column(column).block_bytes()};
}

std::span<const std::byte> Shard::block(std::size_t column, std::uint64_t local_index) const {
  return const_cast<Shard*>(this)->block(column, local_index);
}

std::span<std::byte> Shard::block_view(std::string_view column, std::uint64_t local_index) {
  return block(schema_.index_of(column), local_index);
}

std::span<const std::byte> Shard::block_view(std::string_view column, std::uint64_t local_index) const {
  return block(schema_.index_of(column), local_index);
}

}  // namespace gear
