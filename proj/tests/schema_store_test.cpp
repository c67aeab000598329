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

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <numeric>

#include "gear/index_manager.hpp"
#include "gear/shard.hpp"
#include "support/fixtures.hpp"
#include "support/tmp.hpp"

namespace gear {
namespace {

using testing::error_of;
using testing::obs_act_schema;

// FNV-1a written out independently of the library.
std::uint64_t fnv(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

std::uint64_t read_u64(const std::byte* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | std::to_integer<std::uint64_t>(p[i]);
  return v;
}

TEST(Schema, BlockBytesAreProductOfShapeTimesElementSize) {
  const auto s = obs_act_schema();
  EXPECT_EQ(s.column(0).block_bytes(), 16u);
  EXPECT_EQ(s.column(1).block_bytes(), 4u);
  EXPECT_EQ(s.row_bytes(), 20u);
  EXPECT_EQ(TrajectorySchema({{"img", DType::u8, {3, 84, 84}}}).column(0).block_bytes(), 3u * 84 * 84);
  EXPECT_EQ(TrajectorySchema({{"q", DType::f64, {2, 5}}}).column(0).block_bytes(), 80u);
}

TEST(Schema, HashMatchesHandSerializedCanonicalForm) {
  std::vector<std::uint8_t> canon{2, 0};
  for (auto [name, dtype, extent] : {std::tuple{"obs", 3, 4u}, std::tuple{"act", 1, 1u}}) {
    canon.push_back(3);
    canon.insert(canon.end(), name, name + 3);
    canon.push_back(static_cast<std::uint8_t>(dtype));
    canon.push_back(1);
    put_u32(canon, extent);
  }
  EXPECT_EQ(obs_act_schema().hash(), fnv(canon));
}

TEST(Schema, HashIsOrderSensitiveAndDeterministic) {
  const auto a = obs_act_schema();
  const TrajectorySchema swapped({{"act", DType::i32, {1}}, {"obs", DType::f32, {4}}});
  EXPECT_EQ(a.hash(), obs_act_schema().hash());
  EXPECT_NE(a.hash(), swapped.hash());
  EXPECT_NE(a.hash(), TrajectorySchema({{"obs", DType::f32, {4}}, {"act", DType::i64, {1}}}).hash());
}

TEST(Schema, RejectsInvalidColumnLists) {
  auto bad = [](std::vector<ColumnSpec> cols) { return error_of([&] { TrajectorySchema s(cols); }); };
  EXPECT_EQ(bad({}), Errc::invalid_argument);
  EXPECT_EQ(bad({{"a", DType::u8, {1}}, {"a", DType::f32, {2}}}), Errc::invalid_argument);
  EXPECT_EQ(bad({{"", DType::u8, {1}}}), Errc::invalid_argument);
  EXPECT_EQ(bad({{std::string(65, 'x'), DType::u8, {1}}}), Errc::invalid_argument);
  EXPECT_EQ(bad({{"z", DType::u8, {4, 0}}}), Errc::invalid_argument);
  // An empty shape is a scalar field.
  EXPECT_EQ(TrajectorySchema({{"z", DType::f64, {}}}).row_bytes(), 8u);
  EXPECT_FALSE(bad({{std::string(64, 'x'), DType::u8, {1}}}).has_value());
}

TEST(Schema, LookupByName) {
  const auto s = obs_act_schema();
  EXPECT_EQ(s.index_of("act"), 1u);
  EXPECT_FALSE(s.find("rew").has_value());
  EXPECT_EQ(error_of([&] { s.index_of("rew"); }), Errc::unknown_column);
}

TEST(Shard, CreateProducesZeroedTablesAndFreeIndices) {
  auto shard = Shard::create(obs_act_schema(), 24, 0);
  EXPECT_EQ(shard.capacity(), 24u);
  EXPECT_EQ(shard.schema().size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::uint64_t i = 0; i < 24; ++i) {
      const auto b = shard.block(c, i);
      EXPECT_TRUE(std::all_of(b.begin(), b.end(), [](std::byte x) { return x == std::byte{0}; }));
      EXPECT_EQ(shard.status().state(i), IndexState::free);
    }
  }
  EXPECT_EQ(shard.layout().table_offsets.size(), 2u);
  for (auto off : shard.layout().table_offsets) EXPECT_EQ(off % 64, 0u);
  EXPECT_EQ(shard.layout().aligned_block_bytes, (std::vector<std::uint64_t>{64, 64}));
}

TEST(Shard, CreateRejectsBadArguments) {
  EXPECT_EQ(error_of([] { Shard::create(obs_act_schema(), 0, 0); }), Errc::invalid_argument);
  ShardOptions tight;
  tight.memory_budget = 1 << 20;
  EXPECT_EQ(error_of([&] { Shard::create(TrajectorySchema::synthetic(4096), 1024, 0, tight); }), Errc::budget);
  const auto name = testing::unique_region("dup");
  ShardOptions shared{Backing::shared_region, name};
  auto first = Shard::create(obs_act_schema(), 4, 0, shared);
  EXPECT_EQ(error_of([&] { Shard::create(obs_act_schema(), 4, 0, shared); }), Errc::region);
}

TEST(Shard, HeaderIsBitExact) {
  auto shard = Shard::create(obs_act_schema(), 24, 0);
  const auto* p = shard.region_bytes().data();
  const std::uint8_t magic[] = {0x52, 0x41, 0x45, 0x47};
  EXPECT_EQ(std::memcmp(p, magic, 4), 0);
  EXPECT_EQ(std::to_integer<int>(p[4]), 1);
  EXPECT_EQ(std::to_integer<int>(p[5]) | std::to_integer<int>(p[6]) | std::to_integer<int>(p[7]), 0);
  EXPECT_EQ(read_u64(p + 8), obs_act_schema().hash());
  EXPECT_EQ(read_u64(p + 16), 24u);
  EXPECT_EQ(std::to_integer<int>(p[24]) | std::to_integer<int>(p[25]) << 8, 2);
  // "obs": len, name, dtype f32 (3), ndim 1, extent 4, offset
  const std::uint8_t obs[] = {3, 'o', 'b', 's', 3, 1, 4, 0, 0, 0};
  EXPECT_EQ(std::memcmp(p + 26, obs, sizeof obs), 0);
  EXPECT_EQ(read_u64(p + 36), shard.layout().table_offsets[0]);
  const std::uint8_t act[] = {3, 'a', 'c', 't', 1, 1, 1, 0, 0, 0};
  EXPECT_EQ(std::memcmp(p + 44, act, sizeof act), 0);
  EXPECT_EQ(read_u64(p + 54), shard.layout().table_offsets[1]);
  EXPECT_EQ(shard.layout().header_bytes, 62u);

  const auto h = decode_header(shard.region_bytes());
  EXPECT_EQ(h.capacity, 24u);
  EXPECT_EQ(TrajectorySchema(h.columns), obs_act_schema());
}

TEST(Shard, OpenSharesStorageAndValidatesHeader) {
  const auto name = testing::unique_region("open");
  auto shard = Shard::create(obs_act_schema(), 24, 3, {Backing::shared_region, name});
  auto other = Shard::open(name);
  EXPECT_EQ(other.capacity(), 24u);
  EXPECT_EQ(other.shard_id(), 3u);
  EXPECT_EQ(other.schema(), obs_act_schema());
  EXPECT_EQ(other.layout().table_offsets, shard.layout().table_offsets);

  shard.block_view("obs", 5)[0] = std::byte{0x5a};
  EXPECT_EQ(other.block_view("obs", 5)[0], std::byte{0x5a});

  const TrajectorySchema wrong({{"obs", DType::f32, {5}}});
  EXPECT_EQ(error_of([&] { Shard::open(name, wrong); }), Errc::format);
  EXPECT_EQ(error_of([] { Shard::open("gear.test.no-such-region"); }), Errc::region);

  shard.region().bytes()[0] = std::byte{0};
  EXPECT_EQ(error_of([&] { Shard::open(name); }), Errc::format);
}

TEST(Shard, BadVersionIsRejected) {
  const auto name = testing::unique_region("ver");
  auto shard = Shard::create(obs_act_schema(), 4, 0, {Backing::shared_region, name});
  shard.region().bytes()[4] = std::byte{2};
  EXPECT_EQ(error_of([&] { Shard::open(name); }), Errc::format);
}

TEST(Shard, WriteInOneProcessReadInAnother) {
  const auto name = testing::unique_region("xproc");
  auto shard = Shard::create(obs_act_schema(), 24, 0, {Backing::shared_region, name});
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    auto mine = Shard::open(name);
    auto v = mine.block_view("obs", 7);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<std::byte>(0xa0 + i);
    _exit(0);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0);
  const auto v = shard.block_view("obs", 7);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], static_cast<std::byte>(0xa0 + i));
}

TEST(Shard, BlockViewBoundaries) {
  auto shard = Shard::create(obs_act_schema(), 24, 0);
  EXPECT_EQ(shard.block_view("obs", 23).size(), 16u);
  EXPECT_EQ(shard.block_view("obs", 23).data(), shard.block(0, 0).data() + 23 * 64);
  EXPECT_EQ(error_of([&] { shard.block_view("obs", 24); }), Errc::out_of_range);
  EXPECT_EQ(error_of([&] { shard.block_view("rew", 0); }), Errc::unknown_column);

  auto v = shard.block_view("obs", 3);
  for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<std::byte>(i);
  const auto& cshard = shard;
  const auto r = cshard.block_view("obs", 3);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(r[i], static_cast<std::byte>(i));
}

TEST(Shard, BlocksNeverOverlap) {
  const TrajectorySchema s({{"a", DType::u8, {3}}, {"b", DType::f64, {9}}, {"c", DType::i64, {8}}});
  auto shard = Shard::create(s, 37, 0);
  auto tag = [](std::size_t c, std::uint64_t i, std::size_t b) {
    return static_cast<std::byte>((c * 131 + i * 7 + b * 3 + 1) & 0xff);
  };
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::uint64_t i = 0; i < 37; ++i) {
      auto v = shard.block(c, i);
      for (std::size_t b = 0; b < v.size(); ++b) v[b] = tag(c, i, b);
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::uint64_t i = 0; i < 37; ++i) {
      const auto v = shard.block(c, i);
      for (std::size_t b = 0; b < v.size(); ++b) ASSERT_EQ(v[b], tag(c, i, b)) << c << ' ' << i << ' ' << b;
    }
  }
}

TEST(Shard, GlobalIndexOwnership) {
  auto shard = Shard::create(obs_act_schema(), 24, 1);
  EXPECT_TRUE(shard.owns(24));
  EXPECT_TRUE(shard.owns(47));
  EXPECT_FALSE(shard.owns(23));
  EXPECT_FALSE(shard.owns(48));
  EXPECT_EQ(shard.to_global(2), 26u);
}

class Checkpoint : public ::testing::Test {
 protected:
  testing::TempDir dir;
};

TEST_F(Checkpoint, RestoreIsByteIdentical) {
  auto shard = Shard::create(obs_act_schema(), 24, 2, {.partitions = 2});
  auto m0 = LocalIndexManager::attach(shard, 0);
  auto m1 = LocalIndexManager::attach(shard, 1);
  for (int i = 0; i < 30; ++i) {
    auto& m = i % 3 ? m0 : m1;
    auto buf = m.allocate();
    std::memset(buf.column(0).data(), i + 1, buf.column(0).size());
    m.commit(buf, 0.5 * i);
  }
  m0.release(m0.select_victim());
  m1.evict();
  shard.checkpoint(dir / "ckpt");

  auto restored = Shard::restore(dir / "ckpt");
  ASSERT_EQ(restored.region_bytes().size(), shard.region_bytes().size());
  EXPECT_TRUE(std::equal(shard.region_bytes().begin(), shard.region_bytes().end(), restored.region_bytes().begin()));
  EXPECT_EQ(restored.allocator().queue_contents(0), shard.allocator().queue_contents(0));
  EXPECT_EQ(restored.allocator().queue_contents(1), shard.allocator().queue_contents(1));
  EXPECT_EQ(restored.shard_id(), 2u);
}

TEST_F(Checkpoint, RestoreIntoSharedRegion) {
  auto shard = Shard::create(obs_act_schema(), 8, 0);
  shard.block_view("act", 1)[0] = std::byte{9};
  shard.checkpoint(dir / "ckpt");
  const auto name = testing::unique_region("restore");
  auto restored = Shard::restore(dir / "ckpt", {Backing::shared_region, name});
  EXPECT_EQ(Shard::open(name).block_view("act", 1)[0], std::byte{9});
}

TEST_F(Checkpoint, RefusesInFlightAllocation) {
  auto shard = Shard::create(obs_act_schema(), 4, 0);
  auto m = LocalIndexManager::attach(shard);
  auto buf = m.allocate();
  EXPECT_EQ(error_of([&] { shard.checkpoint(dir / "ckpt"); }), Errc::state);
  m.commit(buf, 1.0);
  EXPECT_FALSE(error_of([&] { shard.checkpoint(dir / "ckpt"); }).has_value());
}

TEST_F(Checkpoint, TruncatedOrForeignFilesFail) {
  auto shard = Shard::create(obs_act_schema(), 4, 0);
  shard.checkpoint(dir / "ckpt");
  const auto full = std::filesystem::file_size(dir / "ckpt");
  std::filesystem::copy_file(dir / "ckpt", dir / "short");
  std::filesystem::resize_file(dir / "short", full - 1);
  EXPECT_EQ(error_of([&] { Shard::restore(dir / "short"); }), Errc::format);
  std::filesystem::resize_file(dir / "short", 10);
  EXPECT_EQ(error_of([&] { Shard::restore(dir / "short"); }), Errc::format);

  std::fstream f(dir / "ckpt", std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(4);
  f.put(7);
  f.close();
  EXPECT_EQ(error_of([&] { Shard::restore(dir / "ckpt"); }), Errc::format);
  EXPECT_EQ(error_of([&] { Shard::restore(dir / "missing"); }), Errc::io);
}

TEST(StatusTable, PublishBumpsEpochByTwo) {
  auto shard = Shard::create(obs_act_schema(), 4, 0);
  auto st = shard.status();
  EXPECT_EQ(st.stable_epoch(2), 0u);
  st.publish(2, IndexState::committed, 2.5, {7, 1});
  EXPECT_EQ(st.stable_epoch(2), 2u);
  const auto r = st.read(2);
  EXPECT_EQ(r.state, IndexState::committed);
  EXPECT_EQ(r.priority, 2.5);
  EXPECT_EQ(r.timestamp, (HybridTimestamp{7, 1}));
  EXPECT_EQ(r.epoch, 2u);
}

}  // namespace
}  // namespace gear
