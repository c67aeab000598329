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

#include <span>

#include "gear/sampling.hpp"
#include "gear/world.hpp"

namespace gear {

// Root gathers every rank's selectable candidates (O(n) on the wire), orders
// them by global index, runs the strategy and broadcasts the index list.
// Identical result on every rank.
SelectionResult select_centralized(World& world, std::span<const Candidate> local, const SelectionRequest& request,
                                   const SelectionConfig& config = {});

// FIFO / TOPK only: each rank ships at most k local winners (O(m k) on the
// wire) and the root merges them with the same rule. Equals
// select_centralized on the same snapshots.
SelectionResult select_decentralized(World& world, std::span<const Candidate> local, const SelectionRequest& request,
                                     const SelectionConfig& config = {});

// Dispatches on config.mode.
SelectionResult select(World& world, std::span<const Candidate> local, const SelectionRequest& request,
                       const SelectionConfig& config = {});

}  // namespace gear
