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
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <random>
#include <set>
#include <thread>

#include "gear/index_manager.hpp"
#include "gear/sampling.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/tmp.hpp"

namespace gear {
namespace {

using testing::error_of;
using testing::obs_act_schema;

std::uint64_t put_row(LocalIndexManager& m, double priority) {
  auto buf = m.allocate();
  return m.commit(buf, priority);
}

TEST(Allocate, FreshShardHandsOutIndicesInOrder) {
  auto shard = Shard::create(obs_act_schema(), 4, 0);
  auto m = LocalIndexManager::attach(shard);
  EXPECT_EQ(m.free_queue(), (std::vector<std::uint64_t>{0, 1, 2, 3}));
  auto a = m.allocate();
  auto b = m.allocate();
  EXPECT_EQ(a.local_index(), 0u);
  EXPECT_EQ(b.local_index(), 1u);
  EXPECT_EQ(shard.status().state(0), IndexState::writing);
  EXPECT_EQ(shard.status().read(0).priority, 0.0);
  EXPECT_EQ(a.columns(), 2u);
  EXPECT_EQ(a.column("obs").data(), shard.block(0, 0).data());
  EXPECT_EQ(a.column(1).data(), shard.block(1, 0).data());
}

TEST(Allocate, FullShardEvictsOldestUnderFifo) {
  auto shard = Shard::create(obs_act_schema(), 2, 0);
  auto m = LocalIndexManager::attach(shard);
  const auto first = put_row(m, 1.0);
  put_row(m, 1.0);
  auto buf = m.allocate();
  EXPECT_EQ(buf.local_index(), first);
  EXPECT_EQ(shard.allocator().counter(0, Counter::evictions), 1u);
}

TEST(Allocate, FullShardEvictsNewestUnderLifo) {
  auto shard = Shard::create(obs_act_schema(), 2, 0);
  auto m = LocalIndexManager::attach(shard, 0, {.removal = RemovalStrategy::lifo});
  put_row(m, 1.0);
  const auto second = put_row(m, 1.0);
  EXPECT_EQ(m.allocate().local_index(), second);
}

TEST(Allocate, AllWritingIsExhausted) {
  auto shard = Shard::create(obs_act_schema(), 1, 0);
  auto m = LocalIndexManager::attach(shard);
  auto held = m.allocate();
  EXPECT_EQ(error_of([&] { m.allocate(); }), Errc::exhausted);
}

TEST(Commit, PublishesPriorityAndTimestamp) {
  auto shard = Shard::create(obs_act_schema(), 4, 5);
  auto m = LocalIndexManager::attach(shard);
  auto buf = m.allocate();
  m.commit(buf, 1.0);
  const auto s = shard.status().read(buf.local_index());
  EXPECT_EQ(s.state, IndexState::committed);
  EXPECT_EQ(s.priority, 1.0);
  EXPECT_EQ(s.timestamp, (HybridTimestamp{1, 5}));
  EXPECT_TRUE(buf.committed());
}

TEST(Commit, RejectsDoubleCommitAndBadPriorities) {
  auto shard = Shard::create(obs_act_schema(), 4, 0);
  auto m = LocalIndexManager::attach(shard);
  auto buf = m.allocate();
  EXPECT_EQ(error_of([&] { m.commit(buf, -1.0); }), Errc::invalid_argument);
  EXPECT_EQ(error_of([&] { m.commit(buf, std::nan("")); }), Errc::invalid_argument);
  EXPECT_EQ(error_of([&] { m.commit(buf, INFINITY); }), Errc::invalid_argument);
  m.commit(buf, 2.0);
  EXPECT_EQ(error_of([&] { m.commit(buf, 2.0); }), Errc::state);
}

TEST(Commit, StaleBufferIsRejected) {
  auto shard = Shard::create(obs_act_schema(), 1, 0);
  auto m = LocalIndexManager::attach(shard);
  auto buf = m.allocate();
  const WriteBuffer stale = buf;
  m.commit(buf, 1.0);
  m.release(buf.local_index());
  auto fresh = m.allocate();
  auto copy = stale;
  EXPECT_EQ(error_of([&] { m.commit(copy, 1.0); }), Errc::state);
  m.commit(fresh, 1.0);
}

TEST(Commit, ZeroPriorityIsCommittedButNeverSelected) {
  auto shard = Shard::create(obs_act_schema(), 8, 0);
  auto m = LocalIndexManager::attach(shard);
  const auto zero = put_row(m, 0.0);
  for (int i = 0; i < 3; ++i) put_row(m, 1.0);
  EXPECT_EQ(shard.status().state(zero), IndexState::committed);
  const auto snap = m.sync();
  EXPECT_EQ(snap.size(), 3u);
  const auto c = to_candidates(snap);
  for (auto s : {Strategy::weighted, Strategy::uniform, Strategy::topk, Strategy::fifo}) {
    const auto r = select_from(c, {s, 2000, 11});
    EXPECT_EQ(std::count(r.global_indices.begin(), r.global_indices.end(), zero), 0);
  }
}

TEST(Release, ReturnsIndexToQueueWithZeroPriority) {
  auto shard = Shard::create(obs_act_schema(), 4, 0);
  auto m = LocalIndexManager::attach(shard);
  const auto i = put_row(m, 3.0);
  m.release(i);
  const auto s = shard.status().read(i);
  EXPECT_EQ(s.state, IndexState::free);
  EXPECT_EQ(s.priority, 0.0);
  EXPECT_EQ(m.free_queue().back(), i);
  EXPECT_EQ(error_of([&] { m.release(i); }), Errc::state);
  auto held = m.allocate();
  EXPECT_EQ(error_of([&] { m.release(held.local_index()); }), Errc::state);
}

TEST(Release, ReleasedIndexIsNeverDrawn) {
  auto shard = Shard::create(obs_act_schema(), 16, 0);
  auto m = LocalIndexManager::attach(shard);
  for (int i = 0; i < 16; ++i) put_row(m, 1.0 + i);
  m.release(15);  // heaviest weight
  const auto r = select_from(to_candidates(m.sync()), {Strategy::weighted, 10000, 3});
  EXPECT_EQ(std::count(r.global_indices.begin(), r.global_indices.end(), 15u), 0);
}

TEST(Victim, FollowsTimestampOrder) {
  for (auto removal : {RemovalStrategy::fifo, RemovalStrategy::lifo}) {
    auto shard = Shard::create(obs_act_schema(), 8, 0);
    auto m = LocalIndexManager::attach(shard, 0, {.removal = removal});
    std::vector<std::uint64_t> idx;
    for (std::uint64_t ts : {2, 1, 3}) {
      auto buf = m.allocate();
      idx.push_back(m.commit(buf, 1.0, {ts, 0}));
    }
    EXPECT_EQ(m.select_victim(), removal == RemovalStrategy::fifo ? idx[1] : idx[2]);
  }
  auto shard = Shard::create(obs_act_schema(), 2, 0);
  auto m = LocalIndexManager::attach(shard);
  EXPECT_EQ(error_of([&] { m.select_victim(); }), Errc::state);
  EXPECT_EQ(error_of([&] { m.evict(); }), Errc::state);
}

TEST(Victim, RandomInterleavingsMatchReferenceSimulator) {
  std::mt19937_64 rng(1234);
  for (int round = 0; round < 1000; ++round) {
    const std::uint64_t cap = 1 + rng() % 12;
    const bool fifo = rng() % 2;
    auto shard = Shard::create(obs_act_schema(), cap, 0);
    auto m = LocalIndexManager::attach(shard, 0, {.removal = fifo ? RemovalStrategy::fifo : RemovalStrategy::lifo});
    std::uint64_t clock = 0;
    testing::ReferencePartition ref(0, cap, fifo, cap, 0, &clock);
    for (int step = 0; step < 40; ++step) {
      if (rng() % 3) {
        const auto want = ref.allocate();
        if (!want) {
          // Everything evicted and nothing committed: no victim left.
          ASSERT_EQ(error_of([&] { m.allocate(); }), Errc::exhausted);
          continue;
        }
        auto buf = m.allocate();
        ASSERT_EQ(*want, buf.local_index());
        m.commit(buf, 1.0);
        ref.commit(buf.local_index(), 1.0);
      } else {
        const auto got = error_of([&] { m.evict(); });
        const auto want = ref.evict();
        ASSERT_EQ(got.has_value(), !want.has_value());
      }
      for (std::uint64_t i = 0; i < cap; ++i) {
        const auto s = shard.status().read(i);
        ASSERT_EQ(s.state, ref.slots()[i].state);
        ASSERT_EQ(s.timestamp, ref.slots()[i].timestamp);
      }
    }
  }
}

TEST(Sync, SnapshotListsCommittedIndices) {
  auto shard = Shard::create(obs_act_schema(), 8, 1);
  auto m = LocalIndexManager::attach(shard);
  EXPECT_TRUE(m.sync().empty());
  std::set<std::uint64_t> written;
  for (int i = 0; i < 5; ++i) written.insert(put_row(m, 0.5 + i));
  auto held = m.allocate();
  const auto snap = m.sync();
  std::set<std::uint64_t> seen;
  for (const auto& e : snap) {
    seen.insert(e.local_index);
    EXPECT_EQ(e.global_index, 8 + e.local_index);
  }
  EXPECT_EQ(seen, written);
}

TEST(Sync, ConcurrentSnapshotsAreNeverTorn) {
  auto shard = Shard::create(obs_act_schema(), 16, 0);
  auto m = LocalIndexManager::attach(shard);
  std::atomic<bool> done{false};
  std::thread writer([&] {
    for (int i = 0; i < 20000; ++i) {
      auto buf = m.allocate();
      // Commit publishes epoch + 2; encode it in the priority.
      m.commit(buf, static_cast<double>(buf.epoch() + 2));
    }
    done = true;
  });
  std::uint64_t checked = 0;
  while (!done) {
    for (const auto& e : snapshot_shard(shard)) {
      ASSERT_EQ(e.priority, static_cast<double>(e.epoch));
      ++checked;
    }
  }
  writer.join();
  EXPECT_GT(checked, 0u);
}

TEST(Invariants, FifoEvictsExactlyTheOldest) {
  const std::uint64_t cap = 24;
  auto shard = Shard::create(obs_act_schema(), cap, 0);
  auto m = LocalIndexManager::attach(shard);
  for (int i = 0; i < 60; ++i) {
    auto buf = m.allocate();
    std::memcpy(buf.column("act").data(), &i, sizeof i);
    m.commit(buf, 1.0);
  }
  std::set<int> survivors;
  for (std::uint64_t i = 0; i < cap; ++i) {
    int v;
    std::memcpy(&v, shard.block(1, i).data(), sizeof v);
    survivors.insert(v);
  }
  std::set<int> expected;
  for (int i = 60 - static_cast<int>(cap); i < 60; ++i) expected.insert(i);
  EXPECT_EQ(survivors, expected);
}

TEST(Invariants, EpochGrowsOnEveryReallocation) {
  auto shard = Shard::create(obs_act_schema(), 1, 0);
  auto m = LocalIndexManager::attach(shard);
  std::uint64_t last = 0;
  for (int i = 0; i < 10; ++i) {
    auto buf = m.allocate();
    EXPECT_GT(buf.epoch(), last);
    last = buf.epoch();
    m.commit(buf, 1.0);
    if (i % 2) m.release(0);
  }
}

TEST(Invariants, QueueHoldsEachFreeIndexOnce) {
  auto shard = Shard::create(obs_act_schema(), 16, 0);
  auto m = LocalIndexManager::attach(shard);
  std::mt19937 rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint64_t> committed;
    for (std::uint64_t j = 0; j < 16; ++j) {
      if (shard.status().state(j) == IndexState::committed) committed.push_back(j);
    }
    if (committed.empty() || rng() % 2) {
      put_row(m, 1.0);
    } else {
      m.release(committed[rng() % committed.size()]);
    }
    const auto q = m.free_queue();
    std::set<std::uint64_t> uniq(q.begin(), q.end());
    ASSERT_EQ(uniq.size(), q.size());
    const auto c = count_states(shard, m.range());
    ASSERT_EQ(c.free, q.size());
    ASSERT_EQ(c.total(), 16u);
  }
}

TEST(Watermark, MaxSelectableBoundsCommittedCount) {
  auto shard = Shard::create(obs_act_schema(), 8, 0);
  auto m = LocalIndexManager::attach(shard, 0, {.max_selectable = 3});
  for (int i = 0; i < 7; ++i) put_row(m, 1.0);
  EXPECT_EQ(m.committed_count(), 3u);
  EXPECT_EQ(count_states(shard, m.range()).committed, 3u);
  EXPECT_EQ(conserved_committed(shard), 3);
  EXPECT_EQ(shard.allocator().counter(0, Counter::evictions), 4u);
}

TEST(Partitions, ManagersSplitTheShard) {
  auto shard = Shard::create(obs_act_schema(), 10, 0, {.partitions = 3});
  std::vector<LocalIndexManager> ms;
  for (std::uint32_t p = 0; p < 3; ++p) ms.push_back(LocalIndexManager::attach(shard, p));
  std::uint64_t next = 0;
  for (auto& m : ms) {
    EXPECT_EQ(m.range().begin, next);
    next = m.range().end;
    for (std::uint64_t i = 0; i < 2 * m.range().size(); ++i) EXPECT_TRUE(m.range().contains(put_row(m, 1.0)));
  }
  EXPECT_EQ(next, 10u);
  EXPECT_EQ(error_of([&] { ms[0].release(ms[1].range().begin); }), Errc::out_of_range);
}

TEST(CrashIsolation, DeadClientsInFlightIndicesAreReclaimed) {
  const auto name = testing::unique_region("crash");
  auto shard = Shard::create(obs_act_schema(), 8, 0, {Backing::shared_region, name, kDefaultMemoryBudget, 2});
  {
    auto m = LocalIndexManager::attach(shard, 0);
    for (int i = 0; i < 2; ++i) put_row(m, 1.0);
  }
  int ready[2];
  ASSERT_EQ(pipe(ready), 0);
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    auto mine = Shard::open(name);
    auto m = LocalIndexManager::attach(mine, 0);
    auto a = m.allocate();
    auto b = m.allocate();
    std::memset(a.column(0).data(), 0xee, a.column(0).size());
    m.evict();
    char c = 1;
    (void)!::write(ready[1], &c, 1);
    pause();
    _exit(0);
  }
  char c;
  ASSERT_EQ(read(ready[0], &c, 1), 1);
  kill(pid, SIGKILL);
  waitpid(pid, nullptr, 0);

  auto fresh = Shard::open(name, obs_act_schema());
  const auto before = count_states(fresh, fresh.allocator().range(0));
  EXPECT_EQ(before.writing, 2u);
  EXPECT_EQ(before.evicted, 1u);
  auto m = LocalIndexManager::attach(fresh, 0);
  EXPECT_EQ(m.reclaimed_on_attach(), 3u);
  const auto after = count_states(fresh, m.range());
  EXPECT_EQ(after.free, 3u);
  EXPECT_EQ(after.committed, before.committed);
  EXPECT_EQ(m.free_queue().size(), 3u);
  EXPECT_EQ(conserved_committed(fresh), static_cast<std::int64_t>(after.committed));
}

}  // namespace
}  // namespace gear
