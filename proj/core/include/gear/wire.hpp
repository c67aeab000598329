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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gear/sampling.hpp"
#include "gear/socket.hpp"

// Binary wire protocol v1, little-endian.
//
//   1 collect request   magic u32, version u8, type u8, shard_id u16,
//                       num_indices u32, num_columns u16,
//                       indices u64[num_indices], column_ids u16[num_columns]
//   2 collect response  magic u32, version u8, type u8, status u8,
//                       num_columns u16, then per column {column_id u16,
//                       payload_len u64, payload}; status 2 appends
//                       num_stale u32 + u64[num_stale]
//   3 snapshot gather   magic, version, type, rank u16, num_records u32,
//                       records {global_index u64, weight f64,
//                       logical_seq u64, node_id u16}
//   4 result broadcast  magic, version, type, status u8, pad u8, count u32,
//                       indices u64[count]
//   5 barrier arrive    magic, version, type, rank u16, generation u32
//   6 barrier release   magic, version, type, rank u16, generation u32
//   7 blob              magic, version, type, rank u16, length u32, bytes
namespace gear::wire {

inline constexpr std::uint32_t kMagic = 0x47454152;
inline constexpr std::uint8_t kVersion = 1;

enum class MsgType : std::uint8_t {
  collect_request = 1,
  collect_response = 2,
  snapshot_gather = 3,
  result_broadcast = 4,
  barrier_arrive = 5,
  barrier_release = 6,
  blob = 7,
};

enum class CollectStatus : std::uint8_t { ok = 0, bad_shard = 1, stale_index = 2, bad_column = 3 };

enum class ResultStatus : std::uint8_t { ok = 0, empty_selection = 1, invalid_request = 2 };

inline constexpr std::size_t kRequestHeaderBytes = 14;
inline constexpr std::size_t kResponseHeaderBytes = 9;
inline constexpr std::size_t kColumnHeaderBytes = 10;
inline constexpr std::size_t kFrameHeaderBytes = 12;
inline constexpr std::size_t kCandidateRecordBytes = 26;

struct CollectRequest {
  std::uint16_t shard_id = 0;
  std::vector<std::uint64_t> indices;
  std::vector<std::uint16_t> column_ids;

  bool operator==(const CollectRequest&) const = default;
};

std::vector<std::byte> encode_collect_request(const CollectRequest& req);
CollectRequest decode_collect_request(std::span<const std::byte> data);
CollectRequest read_collect_request(Socket& socket);

struct ResponseHeader {
  CollectStatus status = CollectStatus::ok;
  std::uint16_t num_columns = 0;
};

std::array<std::byte, kResponseHeaderBytes> encode_response_header(CollectStatus status, std::uint16_t num_columns);
ResponseHeader decode_response_header(std::span<const std::byte> data);
std::array<std::byte, kColumnHeaderBytes> encode_column_header(std::uint16_t column_id, std::uint64_t payload_len);
std::pair<std::uint16_t, std::uint64_t> decode_column_header(std::span<const std::byte> data);

std::vector<std::byte> encode_gather(std::uint16_t rank, std::span<const Candidate> records);
std::vector<Candidate> decode_gather(std::span<const std::byte> frame, std::uint16_t* rank = nullptr);

struct ResultFrame {
  ResultStatus status = ResultStatus::ok;
  std::vector<std::uint64_t> indices;
};

std::vector<std::byte> encode_result(ResultStatus status, std::span<const std::uint64_t> indices);
ResultFrame decode_result(std::span<const std::byte> frame);

std::vector<std::byte> encode_barrier(MsgType type, std::uint16_t rank, std::uint32_t generation);
struct BarrierFrame {
  MsgType type;
  std::uint16_t rank;
  std::uint32_t generation;
};
BarrierFrame decode_barrier(std::span<const std::byte> frame);

std::vector<std::byte> encode_blob(std::uint16_t rank, std::span<const std::byte> payload);
std::span<const std::byte> blob_payload(std::span<const std::byte> frame);

MsgType frame_type(std::span<const std::byte> frame);
// Reads one complete frame of type 3..7.
std::vector<std::byte> read_frame(Socket& socket);

}  // namespace gear::wire
