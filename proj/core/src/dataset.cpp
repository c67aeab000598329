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

#include "gear/dataset.hpp"

#include <algorithm>

#include "gear/byte_io.hpp"
#include "gear/error.hpp"
#include "gear/shard.hpp"

namespace gear {
namespace {

constexpr std::size_t kHeaderProbeBytes = 1 << 20;

void write_bytes(std::ofstream& out, std::span<const std::byte> data) {
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::io, "dataset write failed");
}

bool read_bytes(std::ifstream& in, std::span<std::byte> data) {
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  return static_cast<std::size_t>(in.gcount()) == data.size();
}

}  // namespace

DatasetWriter::DatasetWriter(const std::filesystem::path& path, const TrajectorySchema& schema)
    : out_(path, std::ios::binary | std::ios::trunc), schema_(schema) {
  if (!out_) throw Error(Errc::io, "cannot create " + path.string());
  std::vector<std::byte> head;
  bytes::Writer w(head);
  encode_header(w, schema_, 0, {});
  count_at_ = static_cast<std::streamoff>(head.size());
  w.put(std::uint64_t{0});
  write_bytes(out_, head);
}

void DatasetWriter::append(double priority, std::span<const std::span<const std::byte>> columns) {
  if (columns.size() != schema_.size()) throw Error(Errc::invalid_argument, "one payload per column");
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != schema_.column(c).block_bytes()) {
      throw Error(Errc::invalid_argument, "payload size mismatch in column '" + schema_.column(c).name + "'");
    }
  }
  std::byte p[8];
  bytes::store_f64(p, priority);
  write_bytes(out_, p);
  for (auto col : columns) write_bytes(out_, col);
  ++count_;
}

std::uint64_t DatasetWriter::finish() {
  std::byte n[8];
  bytes::store_le(n, count_);
  out_.seekp(count_at_);
  write_bytes(out_, n);
  out_.close();
  return count_;
}

DatasetReader::DatasetReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), schema_(std::vector<ColumnSpec>{{"_", DType::u8, {1}}}) {
  if (!in_) throw Error(Errc::io, "cannot open " + path.string());
  std::vector<std::byte> probe(kHeaderProbeBytes);
  in_.read(reinterpret_cast<char*>(probe.data()), static_cast<std::streamsize>(probe.size()));
  probe.resize(static_cast<std::size_t>(in_.gcount()));
  in_.clear();
  const auto header = decode_header(probe);
  schema_ = TrajectorySchema(header.columns);
  bytes::Reader r(std::span<const std::byte>(probe).subspan(header.encoded_bytes));
  count_ = r.get<std::uint64_t>();
  in_.seekg(static_cast<std::streamoff>(header.encoded_bytes + 8));
}

bool DatasetReader::next(DatasetRecord& record) {
  if (read_ == count_) return false;
  std::byte p[8];
  if (!read_bytes(in_, p)) throw Error(Errc::format, "dataset truncated at record " + std::to_string(read_));
  record.priority = bytes::load_f64(p);
  record.columns.resize(schema_.size());
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    record.columns[c].resize(schema_.column(c).block_bytes());
    if (!read_bytes(in_, record.columns[c])) {
      throw Error(Errc::format, "dataset truncated at record " + std::to_string(read_));
    }
  }
  ++read_;
  return true;
}

std::uint64_t export_dataset(const Shard& shard, const std::filesystem::path& path) {
  const auto status = shard.status();
  std::vector<std::pair<HybridTimestamp, std::uint64_t>> rows;
  for (std::uint64_t i = 0; i < shard.capacity(); ++i) {
    const auto s = status.read(i);
    if (s.state == IndexState::committed) rows.emplace_back(s.timestamp, i);
  }
  std::sort(rows.begin(), rows.end());
  DatasetWriter out(path, shard.schema());
  std::vector<std::span<const std::byte>> cols(shard.schema().size());
  for (const auto& [ts, i] : rows) {
    for (std::size_t c = 0; c < cols.size(); ++c) cols[c] = shard.block(c, i);
    out.append(status.read(i).priority, cols);
  }
  return out.finish();
}

}  // namespace gear
