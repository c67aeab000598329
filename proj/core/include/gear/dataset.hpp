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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <vector>

#include "gear/schema.hpp"

namespace gear {

class Shard;

// Offline dataset file:
//   shard header (capacity 0, table offsets 0), record count u64,
//   per record {priority f64, block payload per column in schema order}.
// The header's version byte versions the whole file.
struct DatasetRecord {
  double priority = 0.0;
  std::vector<std::vector<std::byte>> columns;
};

class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& path, const TrajectorySchema& schema);
  // Record count is patched in on finish().
  void append(double priority, std::span<const std::span<const std::byte>> columns);
  std::uint64_t finish();

 private:
  std::ofstream out_;
  TrajectorySchema schema_;
  std::streamoff count_at_ = 0;
  std::uint64_t count_ = 0;
};

class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);

  const TrajectorySchema& schema() const noexcept { return schema_; }
  std::uint64_t size() const noexcept { return count_; }
  // False once every record has been read.
  bool next(DatasetRecord& record);

 private:
  std::ifstream in_;
  TrajectorySchema schema_;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
};

// Writes every COMMITTED row of the shard in commit-timestamp order.
std::uint64_t export_dataset(const Shard& shard, const std::filesystem::path& path);

}  // namespace gear
