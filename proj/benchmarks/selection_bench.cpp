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

#include <benchmark/benchmark.h>

#include <random>

#include "gear/placement.hpp"
#include "gear/prefix_sum.hpp"
#include "gear/sampling.hpp"

namespace gear {
namespace {

std::vector<double> random_weights(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = d(rng);
  return w;
}

void BM_PrefixSum(benchmark::State& state) {
  const auto w = random_weights(static_cast<std::size_t>(state.range(0)));
  const auto s = static_cast<std::uint32_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(prefix_sum(w, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PrefixSum)->ArgsProduct({{1 << 10, 1 << 16, 1 << 20}, {1, 4}})->Unit(benchmark::kMicrosecond);

void BM_WeightedSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  WeightedIndexSet set{std::vector<std::uint64_t>(n), random_weights(n)};
  for (std::size_t i = 0; i < n; ++i) set.global_indices[i] = i;
  const auto k = static_cast<std::uint32_t>(state.range(1));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(weighted_sample(set, k, ++seed));
  state.SetItemsProcessed(state.iterations() * k);
}
BENCHMARK(BM_WeightedSample)->ArgsProduct({{1 << 10, 1 << 20}, {32, 1024}})->Unit(benchmark::kMicrosecond);

void BM_TopK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto w = random_weights(n);
  std::vector<Candidate> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = {i, w[i], {i, 0}};
  for (auto _ : state) benchmark::DoNotOptimize(topk_local(c, 256));
}
BENCHMARK(BM_TopK)->Arg(1 << 12)->Arg(1 << 18)->Unit(benchmark::kMicrosecond);

void BM_Translate(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<std::uint64_t> g(static_cast<std::size_t>(state.range(0)));
  for (auto& x : g) x = rng() % (64 * 4096);
  for (auto _ : state) benchmark::DoNotOptimize(translate(g, 4096));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Translate)->Arg(256)->Arg(4096);

}  // namespace
}  // namespace gear
