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

#ifndef INCLUDE_ANNAKV_MONITOR_NODE_HPP_
#define INCLUDE_ANNAKV_MONITOR_NODE_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "annakv/cluster.hpp"
#include "annakv/monitor.hpp"
#include "annakv/policy.hpp"

namespace annakv {

struct MonitorNodeConfig {
  NodeId id = "monitor";
  NodeId manager = "manager";
  uint64_t window_ms = 30000;
  uint64_t collect_offset_ms = 200;  // after the window boundary
  std::vector<std::string> client_ids;
  PolicyConfig policy;
  PerTier<uint32_t> workers_per_node = {4, 4};
  PerTier<uint64_t> node_capacity_bytes = {2 << 20, 8 << 20};
  uint64_t bytes_per_key = 256;
  std::vector<Address> seed_workers;  // cold-start ring reads
};

// The monitoring loop: every window it pulls the published statistics back
// out of the store, assembles a snapshot, summarizes, runs the policy tick,
// and ships the plan to the cluster manager. Holds no durable state; a
// replacement instance rebuilds everything it needs from metadata.
class MonitorNode : public Actor {
 public:
  MonitorNode(const MonitorNodeConfig& cfg, MetaViewPtr view,
              InMemoryTransport& net, bool cold_start);

  void tick(uint64_t now_ms) override;
  void kill() { killed_ = true; }

  const std::vector<ActionPlan>& plans() const { return sent_plans_; }
  MetaViewPtr view() const { return view_; }
  const std::set<NodeId>& suspects() const { return suspects_; }

 private:
  enum class ReadKind : uint8_t {
    kRing,
    kNodeStats,
    kKeyStats,
    kLatency,
    kRvIndex,
    kRv
  };
  struct PendingRead {
    ReadKind kind;
    std::string subject;  // node id, client id, user key, or tier name
    std::string key;
    int redirects_left = 2;
  };

  void begin_collect(uint64_t now_ms);
  void issue_read(ReadKind kind, const std::string& subject,
                  const std::string& key);
  void on_response(const ResponseMsg& resp, uint64_t now_ms);
  void maybe_finish(uint64_t now_ms);
  void finish_collect(uint64_t now_ms);
  void on_broadcast(const BroadcastMsg& msg);

  MonitorNodeConfig cfg_;
  InMemoryTransport& net_;
  MetaViewPtr view_;
  Inbox* inbox_ = nullptr;
  PolicyState policy_state_;
  bool killed_ = false;
  bool collecting_ = false;
  bool rings_ready_;
  uint64_t epoch_ = 0;          // next epoch to collect
  uint64_t collect_deadline_ = 0;
  uint64_t started_at_ = 0;
  uint64_t next_req_id_ = 1;
  std::map<uint64_t, PendingRead> reads_;
  ClusterSnapshot staging_;
  std::set<NodeId> stats_seen_;             // nodes that answered this epoch
  std::map<NodeId, uint64_t> missed_epochs_;
  std::set<NodeId> suspects_;
  std::vector<ActionPlan> sent_plans_;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_MONITOR_NODE_HPP_
