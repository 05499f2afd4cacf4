//  Copyright 2018 U.C. Berkeley RISE Lab
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include "annakv/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace annakv {

uint32_t ClusterConfig::mem_workers() const {
  uint32_t configured = at_tier(workers_per_node, Tier::kMem);
  if (configured > 0) return configured;
  uint32_t hw = std::thread::hardware_concurrency();
  return std::min(hw == 0 ? 4u : hw, 4u);
}

const WorkloadPhase& WorkloadSpec::phase_at(double t_s) const {
  static const WorkloadPhase kDefault{};
  const WorkloadPhase* current = phases.empty() ? &kDefault : &phases.front();
  for (const auto& p : phases)
    if (p.start_s <= t_s) current = &p;
  return *current;
}

namespace {

struct Parser {
  BenchConfig& cfg;
  std::vector<std::string>& errors;

  std::optional<double> num(std::string_view name, std::string_view value) {
    std::string buf(value);
    char* end = nullptr;
    double v = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size()) {
      errors.push_back(std::string(name) + ": expected a number, got '" +
                       buf + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<bool> flag(std::string_view name, std::string_view value) {
    if (value == "1" || value == "true" || value == "on") return true;
    if (value == "0" || value == "false" || value == "off") return false;
    errors.push_back(std::string(name) + ": expected 0/1, got '" +
                     std::string(value) + "'");
    return std::nullopt;
  }

  // "start:theta:ops:offset;start:theta:ops:offset;..."
  void phases(std::string_view value) {
    std::vector<WorkloadPhase> out;
    std::stringstream ss{std::string(value)};
    std::string item;
    while (std::getline(ss, item, ';')) {
      if (item.empty()) continue;
      WorkloadPhase p;
      double offset = 0;
      if (std::sscanf(item.c_str(), "%lf:%lf:%lf:%lf", &p.start_s,
                      &p.zipf_theta, &p.offered_ops, &offset) != 4) {
        errors.push_back("phases: malformed entry '" + item + "'");
        return;
      }
      p.hotspot_offset = static_cast<uint64_t>(offset);
      out.push_back(p);
    }
    cfg.workload.phases = std::move(out);
  }

  bool apply(const std::string& name, const std::string& value) {
    auto set = [&](double& field) {
      if (auto v = num(name, value)) field = *v;
    };
    auto set_u32 = [&](uint32_t& field) {
      if (auto v = num(name, value)) field = static_cast<uint32_t>(*v);
    };
    auto set_u64 = [&](uint64_t& field) {
      if (auto v = num(name, value)) field = static_cast<uint64_t>(*v);
    };
    auto set_flag = [&](bool& field) {
      if (auto v = flag(name, value)) field = *v;
    };

    // SLO spec
    if (name == "L_obj") {
      cfg.slo.mode = SloSpec::Mode::kLatency;
      set(cfg.slo.latency_objective_ms);
    } else if (name == "B") {
      cfg.slo.mode = SloSpec::Mode::kBudget;
      set(cfg.slo.budget_per_hour);
    } else if (name == "k") {
      set_u32(cfg.slo.fault_tolerance);
      // Policy knobs, named exactly as in the knob table.
    } else if (name == "T") {
      set(cfg.knobs.window_s);
    } else if (name == "H_s") {
      set(cfg.knobs.hot_stddevs);
    } else if (name == "L") {
      double v = 0;
      if (auto n = num(name, value)) {
        v = *n;
        cfg.knobs.cold_threshold = v;
      }
    } else if (name == "P") {
      set(cfg.knobs.promotion_threshold);
    } else if (name == "D") {
      set(cfg.knobs.demotion_threshold);
    } else if (name == "S_lower_mem") {
      set(at_tier(cfg.knobs.storage_lower, Tier::kMem));
    } else if (name == "S_upper_mem") {
      set(at_tier(cfg.knobs.storage_upper, Tier::kMem));
    } else if (name == "S_lower_ebs") {
      set(at_tier(cfg.knobs.storage_lower, Tier::kEbs));
    } else if (name == "S_upper_ebs") {
      set(at_tier(cfg.knobs.storage_upper, Tier::kEbs));
    } else if (name == "f_lower") {
      set(cfg.knobs.latency_lower);
    } else if (name == "f_upper") {
      set(cfg.knobs.latency_upper);
    } else if (name == "C_lower") {
      set(cfg.knobs.occupancy_lower);
    } else if (name == "C_upper") {
      set(cfg.knobs.occupancy_upper);
    } else if (name == "c") {
      set(cfg.knobs.latency_ratio_cap);
    } else if (name == "grace_period") {
      set(cfg.knobs.grace_period_s);
      // Cluster
    } else if (name == "mem_nodes") {
      set_u32(at_tier(cfg.cluster.initial_nodes, Tier::kMem));
    } else if (name == "ebs_nodes") {
      set_u32(at_tier(cfg.cluster.initial_nodes, Tier::kEbs));
    } else if (name == "workers_mem") {
      set_u32(at_tier(cfg.cluster.workers_per_node, Tier::kMem));
    } else if (name == "workers_ebs") {
      set_u32(at_tier(cfg.cluster.workers_per_node, Tier::kEbs));
    } else if (name == "mem_capacity") {
      set_u64(at_tier(cfg.cluster.node_capacity_bytes, Tier::kMem));
    } else if (name == "ebs_capacity") {
      set_u64(at_tier(cfg.cluster.node_capacity_bytes, Tier::kEbs));
    } else if (name == "spawn_delay") {
      set(cfg.cluster.spawn_delay_s);
    } else if (name == "gossip_period") {
      set(cfg.cluster.gossip_period_s);
    } else if (name == "price_mem") {
      set(at_tier(cfg.cluster.cost.node_price, Tier::kMem));
    } else if (name == "price_ebs") {
      set(at_tier(cfg.cluster.cost.node_price, Tier::kEbs));
    } else if (name == "price_overhead") {
      set(cfg.cluster.cost.overhead_price);
      // Workload
    } else if (name == "n_keys") {
      set_u64(cfg.workload.n_keys);
    } else if (name == "value_size") {
      set_u32(cfg.workload.value_size);
    } else if (name == "zipf_theta") {
      if (cfg.workload.phases.empty()) cfg.workload.phases.push_back({});
      if (auto v = num(name, value)) cfg.workload.phases[0].zipf_theta = *v;
    } else if (name == "offered_ops") {
      if (cfg.workload.phases.empty()) cfg.workload.phases.push_back({});
      if (auto v = num(name, value)) cfg.workload.phases[0].offered_ops = *v;
    } else if (name == "phases") {
      phases(value);
      // Capacity model
    } else if (name == "service_rate_mem") {
      set(at_tier(cfg.capacity.service_rate, Tier::kMem));
    } else if (name == "service_rate_ebs") {
      set(at_tier(cfg.capacity.service_rate, Tier::kEbs));
    } else if (name == "base_latency_mem") {
      set(at_tier(cfg.capacity.base_latency_ms, Tier::kMem));
    } else if (name == "base_latency_ebs") {
      set(at_tier(cfg.capacity.base_latency_ms, Tier::kEbs));
    } else if (name == "queue_factor") {
      set(cfg.capacity.queue_factor);
      // Bench driver
    } else if (name == "duration") {
      set(cfg.duration_s);
    } else if (name == "report_interval") {
      set(cfg.report_interval_s);
    } else if (name == "seed") {
      set_u64(cfg.seed);
    } else if (name == "clients") {
      set_u32(cfg.clients);
    } else if (name == "elasticity") {
      set_flag(cfg.elasticity_enabled);
    } else if (name == "replication") {
      set_flag(cfg.replication_enabled);
    } else if (name == "movement") {
      set_flag(cfg.movement_enabled);
    } else {
      return false;
    }
    return true;
  }
};

}  // namespace

ParsedConfig parse_config_text(std::string_view text) {
  ParsedConfig out;
  bool saw_latency = false, saw_budget = false;
  Parser parser{out.config, out.errors};
  size_t lineno = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    start = end + 1;
    ++lineno;
    // Trim and skip comments/blanks.
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    size_t first = line.find_first_not_of(' ');
    if (first == std::string::npos) continue;
    line = line.substr(first);
    if (line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      out.errors.push_back("line " + std::to_string(lineno) +
                           ": expected name=value");
      continue;
    }
    std::string name = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (name == "L_obj") saw_latency = true;
    if (name == "B") saw_budget = true;
    if (!parser.apply(name, value))
      out.errors.push_back("line " + std::to_string(lineno) +
                           ": unknown variable '" + name + "'");
  }
  if (saw_latency && saw_budget)
    out.errors.push_back("exactly one of L_obj and B may be specified");
  validate_config(out.config, out.errors);
  return out;
}

ParsedConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ParsedConfig out;
    out.errors.push_back("cannot open config file: " + path);
    return out;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate_config(const BenchConfig& cfg, std::vector<std::string>& errors) {
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  const Knobs& k = cfg.knobs;
  require(k.window_s > 0, "T must be positive");
  require(k.hot_stddevs > 0, "H_s must be positive");
  require(k.promotion_threshold > 0, "P must be positive");
  require(k.demotion_threshold > 0, "D must be positive");
  for (Tier t : kAllTiers)
    require(at_tier(k.storage_lower, t) < at_tier(k.storage_upper, t),
            std::string("S_lower_") + std::string(tier_name(t)) +
                " must be below S_upper_" + std::string(tier_name(t)));
  require(k.latency_lower < k.latency_upper, "f_lower must be below f_upper");
  require(k.occupancy_lower < k.occupancy_upper,
          "C_lower must be below C_upper");
  require(k.latency_ratio_cap > 1.0, "c must exceed 1");

  if (cfg.slo.mode == SloSpec::Mode::kLatency)
    require(cfg.slo.latency_objective_ms > 0, "L_obj must be positive");
  else
    require(cfg.slo.budget_per_hour > 0, "B must be positive");

  require(at_tier(cfg.cluster.initial_nodes, Tier::kMem) >= 1,
          "at least one memory node is required");
  require(at_tier(cfg.cluster.initial_nodes, Tier::kEbs) >=
              cfg.slo.fault_tolerance + 1,
          "ebs_nodes must be at least k+1");
  require(at_tier(cfg.cluster.workers_per_node, Tier::kEbs) >= 1,
          "workers_ebs must be positive");
  require(cfg.cluster.gossip_period_s > 0, "gossip_period must be positive");
  require(cfg.cluster.spawn_delay_s >= 0, "spawn_delay must be non-negative");
  for (Tier t : kAllTiers) {
    require(at_tier(cfg.cluster.cost.node_price, t) > 0,
            "node prices must be positive");
    require(at_tier(cfg.capacity.service_rate, t) > 0,
            "service rates must be positive");
    require(at_tier(cfg.capacity.base_latency_ms, t) > 0,
            "base latencies must be positive");
  }
  require(at_tier(cfg.capacity.base_latency_ms, Tier::kMem) <
              at_tier(cfg.capacity.base_latency_ms, Tier::kEbs),
          "memory base latency must be below the disk tier's");
  require(cfg.workload.n_keys >= 1, "n_keys must be at least 1");
  for (const auto& p : cfg.workload.phases) {
    require(p.zipf_theta >= 0, "zipf_theta must be non-negative");
    require(p.offered_ops > 0, "offered_ops must be positive");
  }
  for (size_t i = 1; i < cfg.workload.phases.size(); ++i)
    require(cfg.workload.phases[i - 1].start_s < cfg.workload.phases[i].start_s,
            "phases must be sorted and non-overlapping");
  require(cfg.duration_s > 0, "duration must be positive");
  require(cfg.report_interval_s > 0, "report_interval must be positive");
}

}  // namespace annakv
