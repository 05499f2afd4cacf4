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

#include "annakv/monitor.hpp"

#include <cmath>
#include <stdexcept>

namespace annakv {

Summary summarize(const ClusterSnapshot& snap, const Knobs& knobs) {
  size_t live = 0;
  for (Tier t : kAllTiers) live += at_tier(snap.membership, t).size();
  if (live == 0) throw std::runtime_error("no live nodes in snapshot");

  Summary out;

  // Population: observed keys plus zero-filled keys that carry a vector.
  double sum = 0;
  uint64_t population = snap.key_counts.size();
  for (const auto& [_, count] : snap.key_counts) sum += count;
  for (const auto& [key, _] : snap.rv_entries)
    if (!snap.key_counts.count(key)) ++population;
  if (population > 0) {
    out.mean_freq = sum / double(population);
    double ss = 0;
    for (const auto& [_, count] : snap.key_counts)
      ss += (count - out.mean_freq) * (count - out.mean_freq);
    ss += double(population - snap.key_counts.size()) * out.mean_freq *
          out.mean_freq;
    out.std_freq = std::sqrt(ss / double(population));
  }
  out.key_population = population;

  double latency_sum = 0;
  for (const auto& report : snap.latency_reports)
    latency_sum += report.mean_latency_ms;
  if (!snap.latency_reports.empty())
    out.avg_latency_ms = latency_sum / double(snap.latency_reports.size());

  PerTier<double> storage_sum = {0, 0};
  PerTier<uint32_t> counted = {0, 0};
  double occupancy_sum = 0;
  uint32_t mem_counted = 0;
  for (const auto& stats : snap.node_stats) {
    at_tier(storage_sum, stats.tier) += stats.storage_fraction;
    at_tier(counted, stats.tier) += 1;
    if (stats.tier == Tier::kMem) {
      occupancy_sum += stats.occupancy;
      ++mem_counted;
    }
  }
  for (Tier t : kAllTiers)
    if (at_tier(counted, t) > 0)
      at_tier(out.avg_storage, t) =
          at_tier(storage_sum, t) / at_tier(counted, t);
  if (mem_counted > 0) out.mem_occupancy = occupancy_sum / mem_counted;

  out.hot_threshold = out.mean_freq + knobs.hot_stddevs * out.std_freq;
  out.cold_threshold = knobs.cold_threshold.value_or(out.mean_freq);
  return out;
}

}  // namespace annakv
