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

#include <optional>

#include "gear/error.hpp"
#include "gear/schema.hpp"

namespace gear::testing {

// The two-column schema used throughout the shard examples.
inline TrajectorySchema obs_act_schema() {
  return TrajectorySchema({{"obs", DType::f32, {4}}, {"act", DType::i32, {1}}});
}

// Error code thrown by f, or nullopt if it returned normally.
template <typename F>
std::optional<Errc> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace gear::testing
