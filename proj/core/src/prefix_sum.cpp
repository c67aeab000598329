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

#include "gear/prefix_sum.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "gear/error.hpp"

namespace gear {
namespace {

template <typename Fn>
void run_workers(std::uint32_t workers, Fn&& fn) {
  if (workers <= 1) {
    fn(0u);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  for (std::uint32_t w = 1; w < workers; ++w) threads.emplace_back([&fn, w] { fn(w); });
  fn(0u);
}

}  // namespace

std::vector<double> prefix_sum(std::span<const double> weights, std::uint32_t parallelism) {
  if (parallelism == 0) throw Error(Errc::invalid_argument, "parallelism must be >= 1");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw Error(Errc::invalid_argument, "weight " + std::to_string(i) + " is negative or not finite");
    }
  }
  const std::size_t n = weights.size();
  std::vector<double> out(n);
  if (n == 0) return out;

  const std::size_t blocks = (n + kScanBlock - 1) / kScanBlock;
  const auto workers = static_cast<std::uint32_t>(std::min<std::size_t>(parallelism, blocks));
  std::vector<double> totals(blocks);

  // Phase 1: independent block-local scans.
  run_workers(workers, [&](std::uint32_t w) {
    for (std::size_t b = w; b < blocks; b += workers) {
      const std::size_t lo = b * kScanBlock;
      const std::size_t hi = std::min(n, lo + kScanBlock);
      double acc = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        acc += weights[i];
        out[i] = acc;
      }
      totals[b] = acc;
    }
  });

  // Phase 2: sequential combine of block totals.
  std::vector<double> offsets(blocks, 0.0);
  for (std::size_t b = 1; b < blocks; ++b) offsets[b] = offsets[b - 1] + totals[b - 1];

  // Phase 3: add each block's offset.
  run_workers(workers, [&](std::uint32_t w) {
    for (std::size_t b = w; b < blocks; b += workers) {
      if (b == 0) continue;
      const std::size_t lo = b * kScanBlock;
      const std::size_t hi = std::min(n, lo + kScanBlock);
      for (std::size_t i = lo; i < hi; ++i) out[i] = offsets[b] + out[i];
    }
  });
  return out;
}

}  // namespace gear
