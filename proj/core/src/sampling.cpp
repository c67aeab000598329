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

#include "gear/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <unordered_set>

#include "gear/error.hpp"
#include "gear/prefix_sum.hpp"
#include "gear/rng.hpp"

namespace gear {
namespace {

constexpr std::uint64_t kRejectionBudgetPerDraw = 4096;

bool by_priority(const Candidate& a, const Candidate& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  return a.global_index < b.global_index;
}

bool by_age(const Candidate& a, const Candidate& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.global_index < b.global_index;
}

template <typename Less>
std::vector<Candidate> best_k(std::span<const Candidate> candidates, std::size_t k, Less less) {
  std::vector<Candidate> out(candidates.begin(), candidates.end());
  const auto take = std::min(k, out.size());
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(take), out.end(), less);
  out.resize(take);
  return out;
}

double draw_point(std::uint64_t seed, std::uint64_t j, double total) {
  double r = uniform01(seed, j) * total;
  if (r >= total) r = std::nextafter(total, 0.0);
  return r;
}

void check_k(std::uint32_t k) {
  if (k == 0) throw Error(Errc::invalid_argument, "k must be >= 1");
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "uniform") return Strategy::uniform;
  if (name == "weighted") return Strategy::weighted;
  if (name == "fifo") return Strategy::fifo;
  if (name == "topk") return Strategy::topk;
  throw Error(Errc::invalid_argument, "unknown strategy '" + std::string(name) + "'");
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::uniform: return "uniform";
    case Strategy::weighted: return "weighted";
    case Strategy::fifo: return "fifo";
    case Strategy::topk: return "topk";
  }
  return "?";
}

SelectionMode parse_mode(std::string_view name) {
  if (name == "centralized") return SelectionMode::centralized;
  if (name == "decentralized") return SelectionMode::decentralized;
  throw Error(Errc::invalid_argument, "unknown selection mode '" + std::string(name) + "'");
}

std::string_view mode_name(SelectionMode m) {
  return m == SelectionMode::centralized ? "centralized" : "decentralized";
}

std::vector<Candidate> to_candidates(const StatusSnapshot& snapshot) {
  std::vector<Candidate> out;
  out.reserve(snapshot.size());
  for (const auto& e : snapshot) out.push_back({e.global_index, e.priority, e.timestamp});
  return out;
}

std::uint64_t SearchStats::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : per_worker) t += c;
  return t;
}

std::size_t find_bin(std::span<const double> prefix, double r, std::uint64_t& comparisons) noexcept {
  std::size_t lo = 0;
  std::size_t hi = prefix.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    ++comparisons;
    if (prefix[mid] > r) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

SelectionResult weighted_sample(const WeightedIndexSet& set, std::uint32_t k, std::uint64_t seed,
                                std::uint32_t parallelism, SearchStats* stats) {
  check_k(k);
  if (parallelism == 0) throw Error(Errc::invalid_argument, "parallelism must be >= 1");
  if (set.global_indices.size() != set.weights.size()) {
    throw Error(Errc::invalid_argument, "indices and weights differ in length");
  }
  if (set.weights.empty()) throw Error(Errc::empty_selection, "no candidates");
  const auto prefix = prefix_sum(set.weights, parallelism);
  const double total = prefix.back();
  if (!(total > 0.0)) throw Error(Errc::empty_selection, "all weights are zero");

  SelectionResult result{std::vector<std::uint64_t>(k), Strategy::weighted, seed};
  const std::uint32_t workers = std::min(parallelism, k);
  const std::uint32_t chunk = (k + workers - 1) / workers;
  std::vector<std::uint64_t> comparisons(workers, 0);

  auto work = [&](std::uint32_t w) {
    const std::uint64_t lo = std::uint64_t{w} * chunk;
    const std::uint64_t hi = std::min<std::uint64_t>(k, lo + chunk);
    std::uint64_t cmp = 0;
    for (auto j = lo; j < hi; ++j) {
      result.global_indices[j] = set.global_indices[find_bin(prefix, draw_point(seed, j, total), cmp)];
    }
    comparisons[w] = cmp;
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (std::uint32_t w = 1; w < workers; ++w) threads.emplace_back(work, w);
    work(0);
  }
  if (stats != nullptr) stats->per_worker = std::move(comparisons);
  return result;
}

SelectionResult weighted_sample_distinct(const WeightedIndexSet& set, std::uint32_t k, std::uint64_t seed) {
  check_k(k);
  if (set.global_indices.size() != set.weights.size()) {
    throw Error(Errc::invalid_argument, "indices and weights differ in length");
  }
  const auto positive = static_cast<std::size_t>(
      std::count_if(set.weights.begin(), set.weights.end(), [](double w) { return w > 0.0; }));
  if (positive == 0) throw Error(Errc::empty_selection, "all weights are zero");
  if (k > positive) {
    throw Error(Errc::invalid_argument, "k exceeds the " + std::to_string(positive) + " selectable indices");
  }
  const auto prefix = prefix_sum(set.weights);
  const double total = prefix.back();
  std::vector<char> taken(set.weights.size(), 0);
  SelectionResult result{{}, Strategy::weighted, seed};
  result.global_indices.reserve(k);
  const std::uint64_t budget = kRejectionBudgetPerDraw * k;
  std::uint64_t cmp = 0;
  for (std::uint64_t j = 0; result.global_indices.size() < k; ++j) {
    if (j >= budget) throw Error(Errc::exhausted, "rejection sampling exceeded its draw budget");
    const auto bin = find_bin(prefix, draw_point(seed, j, total), cmp);
    if (taken[bin]) continue;
    taken[bin] = 1;
    result.global_indices.push_back(set.global_indices[bin]);
  }
  return result;
}

SelectionResult uniform_sample(std::span<const std::uint64_t> indices, std::uint32_t k, std::uint64_t seed,
                               bool with_replacement) {
  check_k(k);
  if (indices.empty()) throw Error(Errc::empty_selection, "no candidates");
  const std::uint64_t n = indices.size();
  if (!with_replacement && k > n) {
    throw Error(Errc::invalid_argument, "k exceeds the " + std::to_string(n) + " selectable indices");
  }
  auto pick = [&](std::uint64_t j) {
    const double r = uniform01(seed, j) * static_cast<double>(n);
    return std::min<std::uint64_t>(static_cast<std::uint64_t>(r), n - 1);
  };
  SelectionResult result{{}, Strategy::uniform, seed};
  result.global_indices.reserve(k);
  if (with_replacement) {
    for (std::uint64_t j = 0; j < k; ++j) result.global_indices.push_back(indices[pick(j)]);
    return result;
  }
  std::vector<char> taken(n, 0);
  const std::uint64_t budget = kRejectionBudgetPerDraw * k;
  for (std::uint64_t j = 0; result.global_indices.size() < k; ++j) {
    if (j >= budget) throw Error(Errc::exhausted, "rejection sampling exceeded its draw budget");
    const auto i = pick(j);
    if (taken[i]) continue;
    taken[i] = 1;
    result.global_indices.push_back(indices[i]);
  }
  return result;
}

std::vector<Candidate> topk_local(std::span<const Candidate> candidates, std::size_t k) {
  return best_k(candidates, k, by_priority);
}

std::vector<Candidate> fifo_local(std::span<const Candidate> candidates, std::size_t k) {
  return best_k(candidates, k, by_age);
}

SelectionResult select_from(std::span<const Candidate> candidates, const SelectionRequest& request,
                            std::uint32_t parallelism, SearchStats* stats) {
  check_k(request.k);
  if (candidates.empty()) throw Error(Errc::empty_selection, "no selectable indices");

  std::vector<Candidate> sorted;
  auto by_index = [](const Candidate& a, const Candidate& b) { return a.global_index < b.global_index; };
  if (!std::is_sorted(candidates.begin(), candidates.end(), by_index)) {
    sorted.assign(candidates.begin(), candidates.end());
    std::sort(sorted.begin(), sorted.end(), by_index);
    candidates = sorted;
  }

  SelectionResult result{{}, request.strategy, request.seed};
  switch (request.strategy) {
    case Strategy::uniform: {
      std::vector<std::uint64_t> ids;
      ids.reserve(candidates.size());
      for (const auto& c : candidates) ids.push_back(c.global_index);
      return uniform_sample(ids, request.k, request.seed, request.with_replacement);
    }
    case Strategy::weighted: {
      WeightedIndexSet set;
      set.global_indices.reserve(candidates.size());
      set.weights.reserve(candidates.size());
      for (const auto& c : candidates) {
        set.global_indices.push_back(c.global_index);
        set.weights.push_back(c.weight);
      }
      return request.with_replacement ? weighted_sample(set, request.k, request.seed, parallelism, stats)
                                      : weighted_sample_distinct(set, request.k, request.seed);
    }
    case Strategy::topk:
      for (const auto& c : topk_local(candidates, request.k)) result.global_indices.push_back(c.global_index);
      return result;
    case Strategy::fifo:
      for (const auto& c : fifo_local(candidates, request.k)) result.global_indices.push_back(c.global_index);
      return result;
  }
  throw Error(Errc::invalid_argument, "bad strategy");
}

}  // namespace gear
