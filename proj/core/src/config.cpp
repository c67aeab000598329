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

#include "gear/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gear/error.hpp"
#include "gear/rng.hpp"
#include "json.hpp"

namespace gear {
namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(Errc::config, what); }

void require(bool ok, const std::string& what) {
  if (!ok) config_error(what);
}

ColumnSpec column_from_json(const json& j) {
  ColumnSpec c;
  c.name = j.at("name").get<std::string>();
  c.dtype = parse_dtype(j.at("dtype").get<std::string>());
  c.shape = j.at("shape").get<std::vector<std::uint32_t>>();
  return c;
}

json column_to_json(const ColumnSpec& c) {
  return {{"name", c.name}, {"dtype", std::string(dtype_name(c.dtype))}, {"shape", c.shape}};
}

double parse_double(std::string_view s) {
  std::size_t used = 0;
  const std::string str(s);
  const double v = std::stod(str, &used);
  if (used != str.size()) throw std::invalid_argument(str);
  return v;
}

}  // namespace

double PriorityDist::draw(std::uint64_t seed, std::uint64_t i, std::uint32_t stream) const {
  if (kind == Kind::constant) return low;
  return low + (high - low) * uniform01(seed, i, stream);
}

PriorityDist PriorityDist::parse(std::string_view text) {
  PriorityDist d;
  try {
    if (text.starts_with("constant:")) {
      d.kind = Kind::constant;
      d.low = d.high = parse_double(text.substr(9));
      if (std::isfinite(d.low) && d.low >= 0) return d;
    }
    if (text.starts_with("uniform:")) {
      const auto rest = text.substr(8);
      const auto colon = rest.find(':');
      if (colon != std::string_view::npos) {
        d.kind = Kind::uniform;
        d.low = parse_double(rest.substr(0, colon));
        d.high = parse_double(rest.substr(colon + 1));
        if (std::isfinite(d.high) && d.low >= 0 && d.high > d.low) return d;
      }
    }
  } catch (const std::exception&) {
  }
  config_error("priority distribution must be constant:C or uniform:LO:HI, got '" + std::string(text) + "'");
}

std::string PriorityDist::to_string() const {
  std::ostringstream s;
  if (kind == Kind::constant) {
    s << "constant:" << low;
  } else {
    s << "uniform:" << low << ':' << high;
  }
  return s.str();
}

void ClusterConfig::validate() const {
  require(nodes >= 1, "nodes must be >= 1");
  require(clients_per_node >= 1, "clients_per_node must be >= 1");
  require(capacity >= 1, "capacity must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(iterations >= 1, "iterations must be >= 1");
  require(parallelism >= 1, "parallelism must be >= 1");
  require(world_size() <= 65535, "at most 65535 clients");
  require(nodes <= 65535, "at most 65535 nodes");
  require(clients_per_node <= capacity, "clients_per_node cannot exceed the shard capacity");

  std::optional<TrajectorySchema> s;
  try {
    s.emplace(schema);
  } catch (const Error& e) {
    config_error(std::string("schema: ") + e.what());
  }
  require(s->row_bytes() <= memory_budget / capacity, "capacity x row bytes exceeds memory_budget");

  if (!addresses.empty()) {
    require(addresses.size() == nodes, "need exactly one address per node");
  }
  std::set<std::string> seen{coordinator.to_string()};
  for (const auto& a : addresses) {
    require(seen.insert(a.to_string()).second, "duplicate address " + a.to_string());
  }
  try {
    topology().validate();
  } catch (const Error& e) {
    config_error(std::string("pipeline_groups: ") + e.what());
  }
  if (mode == SelectionMode::decentralized) {
    require(strategy == Strategy::fifo || strategy == Strategy::topk,
            "decentralized mode supports fifo and topk only");
  }
  if (max_selectable) require(*max_selectable >= 1 && *max_selectable <= capacity, "max_selectable out of range");
  require(std::isfinite(online_rate) && online_rate >= 0, "online_rate must be >= 0");
  require(std::isfinite(duration) && duration >= 0, "duration must be >= 0");
  require(prefill >= 0 && prefill <= 1, "prefill must be in [0, 1]");
  require(std::isfinite(priority.low) && std::isfinite(priority.high) && priority.low >= 0 &&
              priority.low <= priority.high,
          "priority bounds must satisfy 0 <= low <= high");
  for (char c : cluster_id) {
    require(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_',
            "cluster_id may only contain letters, digits, '-' and '_'");
  }
  require(ingest.empty() || std::filesystem::exists(ingest), "ingest file " + ingest.string() + " not found");
}

ClusterConfig parse_config(std::string_view json_text, ClusterConfig base) {
  auto& c = base;
  try {
    const auto j = json::parse(json_text);
    require(j.is_object(), "configuration must be a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "nodes") c.nodes = v.get<std::uint32_t>();
      else if (key == "clients_per_node") c.clients_per_node = v.get<std::uint32_t>();
      else if (key == "capacity") c.capacity = v.get<std::uint64_t>();
      else if (key == "block_bytes") c.schema = TrajectorySchema::synthetic(v.get<std::uint64_t>()).columns();
      else if (key == "schema") {
        c.schema.clear();
        for (const auto& col : v) c.schema.push_back(column_from_json(col));
      }
      else if (key == "strategy") c.strategy = parse_strategy(v.get<std::string>());
      else if (key == "mode") c.mode = parse_mode(v.get<std::string>());
      else if (key == "batch_size") c.batch_size = v.get<std::uint32_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "with_replacement") c.with_replacement = v.get<bool>();
      else if (key == "addresses") {
        c.addresses.clear();
        for (const auto& a : v) c.addresses.push_back(Endpoint::parse(a.get<std::string>()));
      }
      else if (key == "coordinator") c.coordinator = Endpoint::parse(v.get<std::string>());
      else if (key == "pipeline_groups") c.pipeline_groups = v.get<std::vector<std::vector<std::uint32_t>>>();
      else if (key == "removal_strategy") c.removal_strategy = parse_removal(v.get<std::string>());
      else if (key == "max_selectable") {
        if (v.is_null()) c.max_selectable.reset();
        else c.max_selectable = v.get<std::uint64_t>();
      }
      else if (key == "cluster_id") c.cluster_id = v.get<std::string>();
      else if (key == "backing") {
        const auto b = v.get<std::string>();
        require(b == "shared" || b == "private", "backing must be shared or private");
        c.backing = b == "shared" ? Backing::shared_region : Backing::private_memory;
      }
      else if (key == "memory_budget") c.memory_budget = v.get<std::uint64_t>();
      else if (key == "iterations") c.iterations = v.get<std::uint32_t>();
      else if (key == "parallelism") c.parallelism = v.get<std::uint32_t>();
      else if (key == "collect") {
        const auto m = v.get<std::string>();
        require(m == "sliced" || m == "full", "collect must be sliced or full");
        c.collect_full_batch = m == "full";
      }
      else if (key == "verify_payload") c.verify_payload = v.get<bool>();
      else if (key == "report") {
        const auto r = v.get<std::string>();
        require(r == "json" || r == "csv", "report must be json or csv");
        c.report = r == "json" ? ReportFormat::json : ReportFormat::csv;
      }
      else if (key == "ingest") c.ingest = v.get<std::string>();
      else if (key == "online_rate") c.online_rate = v.get<double>();
      else if (key == "duration") c.duration = v.get<double>();
      else if (key == "prefill") c.prefill = v.get<double>();
      else if (key == "priority") c.priority = PriorityDist::parse(v.get<std::string>());
      else config_error("unknown configuration key '" + key + "'");
    }
  } catch (const json::exception& e) {
    config_error(e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::config) throw;
    config_error(e.what());
  }
  return base;
}

ClusterConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const ClusterConfig& c) {
  json j;
  j["nodes"] = c.nodes;
  j["clients_per_node"] = c.clients_per_node;
  j["capacity"] = c.capacity;
  j["schema"] = json::array();
  for (const auto& col : c.schema) j["schema"].push_back(column_to_json(col));
  j["strategy"] = std::string(strategy_name(c.strategy));
  j["mode"] = std::string(mode_name(c.mode));
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["with_replacement"] = c.with_replacement;
  j["addresses"] = json::array();
  for (const auto& a : c.addresses) j["addresses"].push_back(a.to_string());
  j["coordinator"] = c.coordinator.to_string();
  j["pipeline_groups"] = c.pipeline_groups;
  j["removal_strategy"] = c.removal_strategy == RemovalStrategy::fifo ? "fifo" : "lifo";
  j["max_selectable"] = c.max_selectable ? json(*c.max_selectable) : json(nullptr);
  j["cluster_id"] = c.cluster_id;
  j["backing"] = c.backing == Backing::shared_region ? "shared" : "private";
  j["memory_budget"] = c.memory_budget;
  j["iterations"] = c.iterations;
  j["parallelism"] = c.parallelism;
  j["collect"] = c.collect_full_batch ? "full" : "sliced";
  j["verify_payload"] = c.verify_payload;
  j["report"] = c.report == ReportFormat::json ? "json" : "csv";
  j["ingest"] = c.ingest.string();
  j["online_rate"] = c.online_rate;
  j["duration"] = c.duration;
  j["prefill"] = c.prefill;
  j["priority"] = c.priority.to_string();
  return j.dump();
}

}  // namespace gear
