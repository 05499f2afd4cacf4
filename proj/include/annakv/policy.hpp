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

#ifndef INCLUDE_ANNAKV_POLICY_HPP_
#define INCLUDE_ANNAKV_POLICY_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "annakv/monitor.hpp"

namespace annakv {

struct ActionPlan {
  std::vector<std::string> promotions;  // one replica to the memory tier
  std::vector<std::string> demotions;   // all replicas to the disk tier
  std::vector<std::pair<std::string, ReplicationVector>> rv_updates;
  PerTier<uint32_t> add_nodes = {0, 0};
  std::vector<NodeId> remove_nodes;
  std::vector<std::string> warnings;

  bool empty() const {
    return promotions.empty() && demotions.empty() && rv_updates.empty() &&
           add_nodes[0] == 0 && add_nodes[1] == 0 && remove_nodes.empty();
  }
};

std::string encode_plan(const ActionPlan& plan);
std::optional<ActionPlan> decode_plan(std::string_view bytes);

struct PolicyConfig {
  Knobs knobs;
  SloSpec slo;
  CostModel cost;
  double grace_period_s = 5.2;
  bool elasticity_enabled = true;
  bool replication_enabled = true;
  bool movement_enabled = true;
};

// Carry-over between ticks. Everything load-bearing is recoverable from the
// store: the vector view arrives with each snapshot; the recency map is
// rebuilt as keys are observed.
struct PolicyState {
  std::map<std::string, ReplicationVector> rv_view;
  std::map<std::string, uint64_t> last_access_epoch;
  double grace_until_s = 0;
  int64_t last_acted_epoch = -1;
  PerTier<std::vector<NodeId>> last_membership;
  bool membership_seen = false;
};

// The vector edits the executor performs for the movement lists.
ReplicationVector promoted_vector(const ReplicationVector& current,
                                  uint32_t k);
ReplicationVector demoted_vector(uint32_t k);

// Cross-tier movement: promote busy disk-only keys, demote idle
// memory-resident ones, evicting by least recent access when the memory
// tier is full and growth is off the table. Metadata keys never move.
struct MovementDecision {
  std::vector<std::string> promotions;
  std::vector<std::string> demotions;
};
MovementDecision movement_policy(const ClusterSnapshot& snap,
                                 const Summary& summary,
                                 const PolicyConfig& cfg,
                                 const PolicyState& state, bool allow_demote,
                                 bool growth_allowed);

// Hot-key replication: grow a hot key's memory replication by the
// latency-to-objective ratio, across nodes before across workers; restore
// cooled keys to the default vector.
std::vector<std::pair<std::string, ReplicationVector>> replication_policy(
    const ClusterSnapshot& snap, const Summary& summary,
    const PolicyConfig& cfg, const PolicyState& state,
    const std::set<std::string>& exclude, bool allow_grow);

// Node addition for storage or compute pressure, removal when latency and
// occupancy both sit below their floors. Respects one memory node and k+1
// disk nodes as hard minimums.
struct ElasticityDecision {
  PerTier<uint32_t> add_nodes = {0, 0};
  std::vector<NodeId> remove_nodes;
  std::vector<std::pair<std::string, ReplicationVector>> rv_clamps;
  std::vector<std::string> warnings;
};

// The end-to-end tick: storage elasticity, movement, the saturation-cause
// split between compute adds and hot-key replication, then removal. During
// the grace period after any membership change, demotion, replication, and
// elasticity all stay quiet.
ActionPlan policy_tick(const ClusterSnapshot& snap, const PolicyConfig& cfg,
                       PolicyState& state);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_POLICY_HPP_
