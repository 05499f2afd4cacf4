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

#ifndef INCLUDE_ANNAKV_ROUTING_HPP_
#define INCLUDE_ANNAKV_ROUTING_HPP_

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "annakv/node.hpp"

namespace annakv {

struct RoutingNodeConfig {
  NodeId id = "r0";
  std::vector<Address> seed_workers;  // bootstrap reads go here
  uint64_t poll_interval_ms = 150000;  // ring metadata re-read cadence
  uint64_t read_retry_ms = 1000;
  // Local rings are fixed tier configuration, not store state; a cold
  // restart rebuilds them from here.
  PerTier<uint32_t> workers_per_node = {2, 2};
  uint32_t k = 2;
};

// Stateless address service. Holds only soft state: rings and vectors
// cached from broadcasts and from metadata reads; a cold restart rebuilds
// everything from the store.
class RoutingNode : public Actor {
 public:
  // cold_start: begin with empty rings and bootstrap them from metadata.
  RoutingNode(const RoutingNodeConfig& cfg, MetaViewPtr view,
              InMemoryTransport& net, bool cold_start);

  void tick(uint64_t now_ms) override;

  const NodeId& id() const { return cfg_.id; }
  bool ready() const { return ready_; }
  MetaViewPtr view() const { return view_; }
  uint64_t resolve_count() const { return resolve_count_; }
  void kill() { killed_ = true; }

 private:
  void on_resolve(const RequestMsg& req, uint64_t now_ms);
  void answer(const RequestMsg& req);
  void on_broadcast(const BroadcastMsg& msg);
  void on_read_response(const ResponseMsg& resp, uint64_t now_ms);
  void start_ring_reads(uint64_t now_ms);
  void read_meta(const std::string& key, uint64_t now_ms);

  RoutingNodeConfig cfg_;
  InMemoryTransport& net_;
  MetaViewPtr view_;
  Inbox* inbox_ = nullptr;
  bool ready_ = false;
  bool killed_ = false;
  uint64_t resolve_count_ = 0;
  uint64_t next_req_id_ = 1;
  uint64_t next_poll_at_ = 0;
  uint64_t started_at_ = 0;
  uint64_t last_bootstrap_attempt_ = 0;

  struct PendingRead {
    std::string key;
    uint64_t issued_at = 0;
    int redirects_left = 2;
  };
  std::map<uint64_t, PendingRead> reads_;       // req_id -> read
  std::map<std::string, uint64_t> inflight_;    // key -> issued_at
  std::deque<RequestMsg> parked_;               // resolves awaiting state
  std::map<std::string, std::vector<uint64_t>> refresh_waiters_;
  std::map<uint64_t, RequestMsg> waiting_resolves_;
  uint64_t next_waiter_id_ = 1;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_ROUTING_HPP_
