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

#ifndef INCLUDE_ANNAKV_MONITOR_HPP_
#define INCLUDE_ANNAKV_MONITOR_HPP_

#include <map>
#include <string>
#include <vector>

#include "annakv/config.hpp"
#include "annakv/metadata.hpp"
#include "annakv/tiers.hpp"

namespace annakv {

// One monitoring window's worth of cluster statistics, assembled from the
// stats metadata keys (live mode) or synthesized by the capacity-mode
// driver. Everything the policy engine consumes is in here.
struct ClusterSnapshot {
  uint64_t epoch = 0;
  double time_s = 0;
  std::vector<NodeStats> node_stats;
  std::map<std::string, double> key_counts;  // summed over nodes, user keys
  std::vector<LatencyReport> latency_reports;
  PerTier<std::vector<NodeId>> membership;
  PerTier<uint32_t> pending_adds = {0, 0};
  std::map<std::string, ReplicationVector> rv_entries;  // non-default only
  PerTier<uint32_t> workers_per_node = {4, 4};
  PerTier<uint64_t> node_capacity_bytes = {2 << 20, 8 << 20};
  uint64_t bytes_per_key = 256;
  std::vector<NodeId> suspects;

  ReplicationVector rv_of(const std::string& key, uint32_t k) const {
    auto it = rv_entries.find(key);
    return it == rv_entries.end() ? default_vector(k) : it->second;
  }
};

struct Summary {
  double mean_freq = 0;
  double std_freq = 0;  // population standard deviation
  double avg_latency_ms = 0;
  PerTier<double> avg_storage = {0, 0};
  double mem_occupancy = 0;
  double hot_threshold = 0;   // mean + s * std
  double cold_threshold = 0;  // the mean, unless overridden
  uint64_t key_population = 0;
};

// Pure aggregation over one snapshot. The population is every key observed
// this window plus every key carrying a replication-vector entry (those
// count as zero). Throws std::runtime_error when no nodes are live.
Summary summarize(const ClusterSnapshot& snap, const Knobs& knobs);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_MONITOR_HPP_
