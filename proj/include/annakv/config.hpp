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

#ifndef INCLUDE_ANNAKV_CONFIG_HPP_
#define INCLUDE_ANNAKV_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "annakv/tiers.hpp"

namespace annakv {

// Policy knobs. Field comments give the config-file variable names.
struct Knobs {
  double window_s = 30.0;                       // T
  double hot_stddevs = 3.0;                     // H_s
  std::optional<double> cold_threshold;         // L; defaults to the mean
  double promotion_threshold = 2.0;             // P, accesses per window
  double demotion_threshold = 1.0;              // D
  PerTier<double> storage_lower = {0.3, 0.5};   // S_lower_mem, S_lower_ebs
  PerTier<double> storage_upper = {0.6, 0.75};  // S_upper_mem, S_upper_ebs
  double latency_lower = 0.5;                   // f_lower
  double latency_upper = 0.75;                  // f_upper
  double occupancy_lower = 0.05;                // C_lower
  double occupancy_upper = 0.20;                // C_upper
  double latency_ratio_cap = 1.5;               // c
  double grace_period_s = 0.0;                  // grace_period; 0 = derived
};

struct SloSpec {
  enum class Mode : uint8_t { kLatency, kBudget };
  Mode mode = Mode::kLatency;
  double latency_objective_ms = 2.5;  // L_obj
  double budget_per_hour = 0.0;       // B
  uint32_t fault_tolerance = 2;       // k
};

struct CostModel {
  PerTier<double> node_price = {0.532, 0.133};  // price_mem, price_ebs
  double overhead_price = 0.30;                 // price_overhead
};

struct ClusterConfig {
  PerTier<uint32_t> initial_nodes = {1, 3};     // mem_nodes, ebs_nodes
  PerTier<uint32_t> workers_per_node = {0, 4};  // workers_mem (0 = host), workers_ebs
  PerTier<uint64_t> node_capacity_bytes = {2 << 20, 8 << 20};
  double spawn_delay_s = 5.0;
  double gossip_period_s = 0.1;
  uint32_t failure_timeout_heartbeats = 5;
  CostModel cost;

  uint32_t mem_workers() const;  // resolves the host-derived default
};

struct WorkloadPhase {
  double start_s = 0.0;
  double zipf_theta = 0.0;
  double offered_ops = 1000.0;
  uint64_t hotspot_offset = 0;
};

struct WorkloadSpec {
  uint64_t n_keys = 10000;
  uint32_t key_size = 8;
  uint32_t value_size = 256;
  std::vector<WorkloadPhase> phases;  // non-overlapping, sorted by start

  const WorkloadPhase& phase_at(double t_s) const;
};

struct CapacityParams {
  PerTier<double> service_rate = {15000.0, 1000.0};  // Q: ops/s per node
  PerTier<double> base_latency_ms = {1.0, 20.0};
  double queue_factor = 10.0;
};

struct BenchConfig {
  Knobs knobs;
  SloSpec slo;
  ClusterConfig cluster;
  WorkloadSpec workload;
  CapacityParams capacity;
  double duration_s = 300.0;
  double report_interval_s = 1.0;
  uint64_t seed = 1;
  uint32_t clients = 8;
  bool elasticity_enabled = true;
  bool replication_enabled = true;
  bool movement_enabled = true;

  double grace_period_s() const {
    return knobs.grace_period_s > 0
               ? knobs.grace_period_s
               : cluster.spawn_delay_s + 2 * cluster.gossip_period_s;
  }
};

// Flat "name=value" config format; '#' starts a comment line. Unknown names
// are rejected so typos surface in validate-config.
struct ParsedConfig {
  BenchConfig config;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

ParsedConfig parse_config_text(std::string_view text);
ParsedConfig load_config_file(const std::string& path);

// Contract checks beyond syntax: threshold ordering, exactly one SLO goal,
// positive rates. Appends messages to errors.
void validate_config(const BenchConfig& cfg, std::vector<std::string>& errors);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_CONFIG_HPP_
