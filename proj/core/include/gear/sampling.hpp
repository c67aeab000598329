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
#include <string_view>
#include <vector>

#include "gear/index_manager.hpp"
#include "gear/status.hpp"

namespace gear {

enum class Strategy : std::uint8_t { uniform = 0, weighted = 1, fifo = 2, topk = 3 };
enum class SelectionMode : std::uint8_t { centralized = 0, decentralized = 1 };

Strategy parse_strategy(std::string_view name);
std::string_view strategy_name(Strategy s);
SelectionMode parse_mode(std::string_view name);
std::string_view mode_name(SelectionMode m);

struct SelectionRequest {
  Strategy strategy = Strategy::uniform;
  std::uint32_t k = 1;
  std::uint64_t seed = 0;
  bool with_replacement = true;  // UNIFORM / WEIGHTED only
};

struct SelectionConfig {
  std::uint32_t parallelism = 1;
  SelectionMode mode = SelectionMode::centralized;
};

struct WeightedIndexSet {
  std::vector<std::uint64_t> global_indices;
  std::vector<double> weights;
};

struct SelectionResult {
  std::vector<std::uint64_t> global_indices;
  Strategy strategy = Strategy::uniform;
  std::uint64_t seed = 0;

  bool operator==(const SelectionResult&) const = default;
};

// What one node contributes to a selection round: a selectable index with its
// weight and commit timestamp.
struct Candidate {
  std::uint64_t global_index = 0;
  double weight = 0.0;
  HybridTimestamp timestamp;

  bool operator==(const Candidate&) const = default;
};

std::vector<Candidate> to_candidates(const StatusSnapshot& snapshot);

// Binary-search comparisons performed by each sampling worker.
struct SearchStats {
  std::vector<std::uint64_t> per_worker;
  std::uint64_t total() const noexcept;
};

// First bin whose inclusive prefix exceeds r. Requires r < prefix.back();
// performs at most ceil(log2(prefix.size())) comparisons.
std::size_t find_bin(std::span<const double> prefix, double r, std::uint64_t& comparisons) noexcept;

// k draws with replacement, P(i) = w_i / sum(w). Draw j consumes variate j of
// the seed's counter stream, so the output is independent of parallelism.
SelectionResult weighted_sample(const WeightedIndexSet& set, std::uint32_t k, std::uint64_t seed,
                                std::uint32_t parallelism = 1, SearchStats* stats = nullptr);

// Sequential rejection over the same variate stream; k distinct indices.
SelectionResult weighted_sample_distinct(const WeightedIndexSet& set, std::uint32_t k, std::uint64_t seed);

// Same output as weighted_sample over equal weights, without the scan.
SelectionResult uniform_sample(std::span<const std::uint64_t> indices, std::uint32_t k, std::uint64_t seed,
                               bool with_replacement = true);

// k highest weights, ties to the smaller global index. May return fewer.
std::vector<Candidate> topk_local(std::span<const Candidate> candidates, std::size_t k);
// k smallest timestamps (ties to the smaller global index). May return fewer.
std::vector<Candidate> fifo_local(std::span<const Candidate> candidates, std::size_t k);

// Runs any strategy over a candidate set. Candidates are canonicalized to
// ascending global index first.
SelectionResult select_from(std::span<const Candidate> candidates, const SelectionRequest& request,
                            std::uint32_t parallelism = 1, SearchStats* stats = nullptr);

}  // namespace gear
