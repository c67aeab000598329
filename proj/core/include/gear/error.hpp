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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gear {

enum class Errc {
  invalid_argument,
  out_of_range,
  unknown_column,
  unknown_node,
  region,
  budget,
  format,
  state,
  exhausted,
  empty_selection,
  io,
  protocol,
  timeout,
  unreachable,
  stale_index,
  config,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Raised when collection hits indices that are no longer committed (or were
// rewritten while being copied). Offending indices are global.
class StaleIndexError : public Error {
 public:
  StaleIndexError(std::vector<std::uint64_t> indices, const std::string& what)
      : Error(Errc::stale_index, what), indices_(std::move(indices)) {}

  const std::vector<std::uint64_t>& indices() const noexcept { return indices_; }

 private:
  std::vector<std::uint64_t> indices_;
};

inline const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::out_of_range: return "out of range";
    case Errc::unknown_column: return "unknown column";
    case Errc::unknown_node: return "unknown node";
    case Errc::region: return "region";
    case Errc::budget: return "memory budget";
    case Errc::format: return "format";
    case Errc::state: return "state";
    case Errc::exhausted: return "allocation exhausted";
    case Errc::empty_selection: return "empty selection";
    case Errc::io: return "io";
    case Errc::protocol: return "protocol";
    case Errc::timeout: return "timeout";
    case Errc::unreachable: return "unreachable";
    case Errc::stale_index: return "stale index";
    case Errc::config: return "config";
  }
  return "unknown";
}

}  // namespace gear
