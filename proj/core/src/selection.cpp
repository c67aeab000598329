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

#include "gear/selection.hpp"

#include <algorithm>
#include <string>

#include "gear/error.hpp"
#include "gear/wire.hpp"

namespace gear {
namespace {

std::vector<Candidate> merge_frames(const std::vector<std::vector<std::byte>>& frames) {
  std::vector<Candidate> all;
  for (const auto& f : frames) {
    auto part = wire::decode_gather(f);
    all.insert(all.end(), part.begin(), part.end());
  }
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) { return a.global_index < b.global_index; });
  return all;
}

// Root computes, everyone receives; root-side failures are broadcast so every
// rank raises the same error.
template <typename Compute>
SelectionResult root_decides(World& world, std::vector<std::byte> frame, const SelectionRequest& request,
                             Compute compute) {
  auto frames = world.gather(std::move(frame));
  std::vector<std::byte> out;
  if (world.is_root()) {
    try {
      const auto result = compute(merge_frames(frames));
      out = wire::encode_result(wire::ResultStatus::ok, result.global_indices);
    } catch (const Error& e) {
      const auto status = e.code() == Errc::empty_selection ? wire::ResultStatus::empty_selection
                                                            : wire::ResultStatus::invalid_request;
      out = wire::encode_result(status, {});
    }
  }
  const auto reply = wire::decode_result(world.broadcast(std::move(out)));
  switch (reply.status) {
    case wire::ResultStatus::ok: break;
    case wire::ResultStatus::empty_selection: throw Error(Errc::empty_selection, "no selectable indices in the world");
    default: throw Error(Errc::invalid_argument, "selection request rejected by the central node");
  }
  return {reply.indices, request.strategy, request.seed};
}

}  // namespace

SelectionResult select_centralized(World& world, std::span<const Candidate> local, const SelectionRequest& request,
                                   const SelectionConfig& config) {
  return root_decides(world, wire::encode_gather(static_cast<std::uint16_t>(world.rank()), local), request,
                      [&](const std::vector<Candidate>& all) { return select_from(all, request, config.parallelism); });
}

SelectionResult select_decentralized(World& world, std::span<const Candidate> local, const SelectionRequest& request,
                                     const SelectionConfig& config) {
  if (request.strategy != Strategy::fifo && request.strategy != Strategy::topk) {
    throw Error(Errc::invalid_argument, "decentralized selection supports only fifo and topk, not " +
                                            std::string(strategy_name(request.strategy)));
  }
  if (request.k == 0) throw Error(Errc::invalid_argument, "k must be >= 1");
  const auto winners =
      request.strategy == Strategy::topk ? topk_local(local, request.k) : fifo_local(local, request.k);
  return root_decides(world, wire::encode_gather(static_cast<std::uint16_t>(world.rank()), winners), request,
                      [&](const std::vector<Candidate>& all) { return select_from(all, request, config.parallelism); });
}

SelectionResult select(World& world, std::span<const Candidate> local, const SelectionRequest& request,
                       const SelectionConfig& config) {
  return config.mode == SelectionMode::centralized ? select_centralized(world, local, request, config)
                                                   : select_decentralized(world, local, request, config);
}

}  // namespace gear
