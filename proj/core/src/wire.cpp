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

#include "gear/wire.hpp"

#include <string>

#include "gear/byte_io.hpp"
#include "gear/error.hpp"

namespace gear::wire {
namespace {

void check_preamble(bytes::Reader& in, MsgType expected) {
  if (in.get<std::uint32_t>() != kMagic) throw Error(Errc::protocol, "bad magic");
  const auto version = in.get<std::uint8_t>();
  if (version != kVersion) throw Error(Errc::protocol, "unsupported version " + std::to_string(version));
  const auto type = in.get<std::uint8_t>();
  if (type != static_cast<std::uint8_t>(expected)) {
    throw Error(Errc::protocol, "expected message type " + std::to_string(static_cast<int>(expected)) + ", got " +
                                    std::to_string(type));
  }
}

void put_preamble(bytes::Writer& out, MsgType type) {
  out.put(kMagic).put(kVersion).put(static_cast<std::uint8_t>(type));
}

}  // namespace

std::vector<std::byte> encode_collect_request(const CollectRequest& req) {
  std::vector<std::byte> out;
  out.reserve(kRequestHeaderBytes + 8 * req.indices.size() + 2 * req.column_ids.size());
  bytes::Writer w(out);
  put_preamble(w, MsgType::collect_request);
  w.put(req.shard_id).put(static_cast<std::uint32_t>(req.indices.size()));
  w.put(static_cast<std::uint16_t>(req.column_ids.size()));
  for (auto i : req.indices) w.put(i);
  for (auto c : req.column_ids) w.put(c);
  return out;
}

CollectRequest decode_collect_request(std::span<const std::byte> data) {
  bytes::Reader in(data);
  check_preamble(in, MsgType::collect_request);
  CollectRequest req;
  req.shard_id = in.get<std::uint16_t>();
  const auto n = in.get<std::uint32_t>();
  const auto c = in.get<std::uint16_t>();
  if (in.remaining() != 8ULL * n + 2ULL * c) throw Error(Errc::protocol, "request length mismatch");
  req.indices.resize(n);
  for (auto& i : req.indices) i = in.get<std::uint64_t>();
  req.column_ids.resize(c);
  for (auto& id : req.column_ids) id = in.get<std::uint16_t>();
  return req;
}

CollectRequest read_collect_request(Socket& socket) {
  std::vector<std::byte> buf(kRequestHeaderBytes);
  socket.recv_all(buf);
  bytes::Reader in(buf);
  check_preamble(in, MsgType::collect_request);
  in.skip(2);
  const auto n = in.get<std::uint32_t>();
  const auto c = in.get<std::uint16_t>();
  buf.resize(kRequestHeaderBytes + 8ULL * n + 2ULL * c);
  socket.recv_all(std::span(buf).subspan(kRequestHeaderBytes));
  return decode_collect_request(buf);
}

std::array<std::byte, kResponseHeaderBytes> encode_response_header(CollectStatus status, std::uint16_t num_columns) {
  std::array<std::byte, kResponseHeaderBytes> out{};
  bytes::store_le(out.data(), kMagic);
  out[4] = std::byte{kVersion};
  out[5] = std::byte{static_cast<std::uint8_t>(MsgType::collect_response)};
  out[6] = std::byte{static_cast<std::uint8_t>(status)};
  bytes::store_le(out.data() + 7, num_columns);
  return out;
}

ResponseHeader decode_response_header(std::span<const std::byte> data) {
  bytes::Reader in(data);
  check_preamble(in, MsgType::collect_response);
  ResponseHeader h;
  const auto status = in.get<std::uint8_t>();
  if (status > static_cast<std::uint8_t>(CollectStatus::bad_column)) {
    throw Error(Errc::protocol, "bad response status " + std::to_string(status));
  }
  h.status = static_cast<CollectStatus>(status);
  h.num_columns = in.get<std::uint16_t>();
  return h;
}

std::array<std::byte, kColumnHeaderBytes> encode_column_header(std::uint16_t column_id, std::uint64_t payload_len) {
  std::array<std::byte, kColumnHeaderBytes> out{};
  bytes::store_le(out.data(), column_id);
  bytes::store_le(out.data() + 2, payload_len);
  return out;
}

std::pair<std::uint16_t, std::uint64_t> decode_column_header(std::span<const std::byte> data) {
  bytes::Reader in(data);
  const auto id = in.get<std::uint16_t>();
  return {id, in.get<std::uint64_t>()};
}

std::vector<std::byte> encode_gather(std::uint16_t rank, std::span<const Candidate> records) {
  std::vector<std::byte> out;
  out.reserve(kFrameHeaderBytes + kCandidateRecordBytes * records.size());
  bytes::Writer w(out);
  put_preamble(w, MsgType::snapshot_gather);
  w.put(rank).put(static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    w.put(r.global_index).put_f64(r.weight).put(r.timestamp.logical_seq).put(r.timestamp.node_id);
  }
  return out;
}

std::vector<Candidate> decode_gather(std::span<const std::byte> frame, std::uint16_t* rank) {
  bytes::Reader in(frame);
  check_preamble(in, MsgType::snapshot_gather);
  const auto r = in.get<std::uint16_t>();
  if (rank != nullptr) *rank = r;
  const auto n = in.get<std::uint32_t>();
  if (in.remaining() != kCandidateRecordBytes * n) throw Error(Errc::protocol, "gather length mismatch");
  std::vector<Candidate> out(n);
  for (auto& c : out) {
    c.global_index = in.get<std::uint64_t>();
    c.weight = in.get_f64();
    c.timestamp.logical_seq = in.get<std::uint64_t>();
    c.timestamp.node_id = in.get<std::uint16_t>();
  }
  return out;
}

std::vector<std::byte> encode_result(ResultStatus status, std::span<const std::uint64_t> indices) {
  std::vector<std::byte> out;
  out.reserve(kFrameHeaderBytes + 8 * indices.size());
  bytes::Writer w(out);
  put_preamble(w, MsgType::result_broadcast);
  w.put(static_cast<std::uint8_t>(status)).pad(1).put(static_cast<std::uint32_t>(indices.size()));
  for (auto i : indices) w.put(i);
  return out;
}

ResultFrame decode_result(std::span<const std::byte> frame) {
  bytes::Reader in(frame);
  check_preamble(in, MsgType::result_broadcast);
  ResultFrame r;
  r.status = static_cast<ResultStatus>(in.get<std::uint8_t>());
  in.skip(1);
  const auto n = in.get<std::uint32_t>();
  if (in.remaining() != 8ULL * n) throw Error(Errc::protocol, "result length mismatch");
  r.indices.resize(n);
  for (auto& i : r.indices) i = in.get<std::uint64_t>();
  return r;
}

std::vector<std::byte> encode_barrier(MsgType type, std::uint16_t rank, std::uint32_t generation) {
  std::vector<std::byte> out;
  bytes::Writer w(out);
  put_preamble(w, type);
  w.put(rank).put(generation);
  return out;
}

BarrierFrame decode_barrier(std::span<const std::byte> frame) {
  const auto type = frame_type(frame);
  if (type != MsgType::barrier_arrive && type != MsgType::barrier_release) {
    throw Error(Errc::protocol, "not a barrier frame");
  }
  bytes::Reader in(frame);
  check_preamble(in, type);
  BarrierFrame b{type, 0, 0};
  b.rank = in.get<std::uint16_t>();
  b.generation = in.get<std::uint32_t>();
  return b;
}

std::vector<std::byte> encode_blob(std::uint16_t rank, std::span<const std::byte> payload) {
  std::vector<std::byte> out;
  out.reserve(kFrameHeaderBytes + payload.size());
  bytes::Writer w(out);
  put_preamble(w, MsgType::blob);
  w.put(rank).put(static_cast<std::uint32_t>(payload.size())).put_bytes(payload);
  return out;
}

std::span<const std::byte> blob_payload(std::span<const std::byte> frame) {
  bytes::Reader in(frame);
  check_preamble(in, MsgType::blob);
  in.skip(2);
  const auto n = in.get<std::uint32_t>();
  return in.get_bytes(n);
}

MsgType frame_type(std::span<const std::byte> frame) {
  if (frame.size() < 6) throw Error(Errc::protocol, "short frame");
  if (bytes::load_le<std::uint32_t>(frame.data()) != kMagic) throw Error(Errc::protocol, "bad magic");
  if (std::to_integer<std::uint8_t>(frame[4]) != kVersion) throw Error(Errc::protocol, "unsupported version");
  return static_cast<MsgType>(std::to_integer<std::uint8_t>(frame[5]));
}

std::vector<std::byte> read_frame(Socket& socket) {
  std::vector<std::byte> buf(kFrameHeaderBytes);
  socket.recv_all(buf);
  const auto type = frame_type(buf);
  const auto count = bytes::load_le<std::uint32_t>(buf.data() + 8);
  std::size_t body = 0;
  switch (type) {
    case MsgType::snapshot_gather: body = kCandidateRecordBytes * count; break;
    case MsgType::result_broadcast: body = 8ULL * count; break;
    case MsgType::blob: body = count; break;
    case MsgType::barrier_arrive:
    case MsgType::barrier_release: body = 0; break;
    default: throw Error(Errc::protocol, "unexpected frame type " + std::to_string(static_cast<int>(type)));
  }
  buf.resize(kFrameHeaderBytes + body);
  if (body > 0) socket.recv_all(std::span(buf).subspan(kFrameHeaderBytes));
  return buf;
}

}  // namespace gear::wire
