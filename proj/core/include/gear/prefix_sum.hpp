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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gear {

// Elements per scan block. Association is fixed by this constant, never by
// the worker count: out[i] = offset(block(i)) + local_inclusive(i), where
// offsets are summed block totals left to right. Within the first block this
// is plain left-to-right summation.
inline constexpr std::size_t kScanBlock = 4096;

// Inclusive prefix sum over non-negative finite weights using 'parallelism'
// workers. Bit-identical for every parallelism value.
std::vector<double> prefix_sum(std::span<const double> weights, std::uint32_t parallelism = 1);

}  // namespace gear
