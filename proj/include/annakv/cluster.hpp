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

#ifndef INCLUDE_ANNAKV_CLUSTER_HPP_
#define INCLUDE_ANNAKV_CLUSTER_HPP_

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "annakv/config.hpp"
#include "annakv/node.hpp"
#include "annakv/policy.hpp"

namespace annakv {

struct NodeHandle {
  enum class State : uint8_t { kPending, kLive, kDeparting, kFailed };

  NodeId id;
  Tier tier = Tier::kMem;
  State state = State::kPending;
  uint64_t spawn_deadline_ms = 0;
};

struct ClusterShape {
  PerTier<std::vector<NodeId>> live;
  PerTier<uint32_t> pending = {0, 0};

  uint32_t live_count(Tier t) const {
    return static_cast<uint32_t>(at_tier(live, t).size());
  }
  uint32_t billed_count(Tier t) const {
    return live_count(t) + at_tier(pending, t);
  }
  bool empty() const {
    return billed_count(Tier::kMem) == 0 && billed_count(Tier::kEbs) == 0;
  }
};

// Cost per hour for a topology: live and pending nodes bill alike, plus the
// fixed routing/monitoring overhead. Throws std::invalid_argument on an
// empty shape.
double hourly_cost(const ClusterShape& shape, const CostModel& model);

// Bookkeeping shared by the live manager and the capacity-mode driver:
// handles, spawn delays, tier minimums, and plan idempotence.
class TopologyLedger {
 public:
  TopologyLedger(PerTier<uint32_t> minimums, uint64_t spawn_delay_ms);

  void bootstrap(Tier tier, const NodeId& id);  // initial LIVE node

  struct Applied {
    std::vector<NodeId> departures;      // run the departure protocol
    std::vector<std::string> dropped;    // log lines for refused requests
  };
  // Node add/remove requests only; vector edits are the caller's business.
  // Add requests already covered by PENDING nodes are no-ops; removals
  // that would breach a tier minimum are dropped.
  Applied apply_plan(const ActionPlan& plan, uint64_t now_ms);

  // Replacement for a failed node: always spawns, no dedupe.
  NodeId spawn_replacement(Tier tier, uint64_t now_ms);

  // PENDING nodes whose deadline passed; caller boots them then marks live.
  std::vector<NodeId> due_spawns(uint64_t now_ms) const;
  void mark_live(const NodeId& id);
  bool fail(const NodeId& id);
  void complete_departure(const NodeId& id);

  ClusterShape shape() const;
  const std::map<NodeId, NodeHandle>& handles() const { return handles_; }
  bool degraded() const;

 private:
  NodeId allocate_id(Tier tier);

  PerTier<uint32_t> minimums_;
  uint64_t spawn_delay_ms_;
  std::map<NodeId, NodeHandle> handles_;
  PerTier<uint32_t> next_index_ = {0, 0};
};

struct ClusterManagerConfig {
  NodeId id = "manager";
  PerTier<uint32_t> minimums = {1, 3};
  uint64_t spawn_delay_ms = 5000;
  uint64_t heartbeat_period_ms = 100;
  uint32_t failure_timeout_periods = 5;
  CostModel cost;
  uint32_t k = 2;
};

// The single actor that mutates cluster membership: executes plans, detects
// failures by heartbeat timeout, spawns replacements, owns the authoritative
// ring and vector metadata writes.
class ClusterManager : public Actor {
 public:
  using NodeFactory =
      std::function<StorageNode*(const StorageNodeConfig&, MetaViewPtr)>;

  ClusterManager(const ClusterManagerConfig& cfg,
                 const StorageNodeConfig& node_template, MetaViewPtr view,
                 InMemoryTransport& net, NodeFactory factory);

  void adopt(StorageNode* node);  // bootstrap-time nodes

  void tick(uint64_t now_ms) override;

  // Scenario-facing control API.
  void add(Tier tier, uint32_t count, uint64_t now_ms);
  void remove(const NodeId& id, uint64_t now_ms);
  void fail_node(const NodeId& id, uint64_t now_ms);
  ClusterShape shape() const { return ledger_.shape(); }
  double current_hourly_cost() const {
    return hourly_cost(ledger_.shape(), cfg_.cost);
  }
  bool degraded() const { return ledger_.degraded(); }
  MetaViewPtr view() const { return view_; }
  const std::vector<std::string>& log() const { return log_; }

 private:
  void execute(const ActionPlan& plan, uint64_t now_ms);
  void apply_rv_change(const std::string& key, const ReplicationVector& rv,
                       uint64_t now_ms);
  void detect_failures(uint64_t now_ms);
  void spawn_due(uint64_t now_ms);
  void write_ring_meta();
  void write_rv_index();
  void internal_put(const std::string& key, const std::string& value);

  ClusterManagerConfig cfg_;
  StorageNodeConfig node_template_;
  InMemoryTransport& net_;
  NodeFactory factory_;
  MetaViewPtr view_;
  TopologyLedger ledger_;
  Inbox* inbox_ = nullptr;
  std::map<NodeId, StorageNode*> registry_;
  std::map<NodeId, uint64_t> last_heartbeat_;
  std::set<NodeId> suspects_;
  std::set<std::string> rv_index_;
  std::vector<std::string> log_;
  uint64_t next_req_id_ = 1;
  uint32_t next_writer_base_ = 4096;
  bool initialized_ = false;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_CLUSTER_HPP_
