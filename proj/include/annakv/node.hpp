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

#ifndef INCLUDE_ANNAKV_NODE_HPP_
#define INCLUDE_ANNAKV_NODE_HPP_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "annakv/worker.hpp"

namespace annakv {

// Anything driven by the cooperative scheduler.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual void tick(uint64_t now_ms) = 0;
};

struct StorageNodeConfig {
  NodeId id;
  Tier tier = Tier::kMem;
  uint32_t worker_count = 4;
  uint64_t capacity_bytes = 2 << 20;
  double per_op_busy_ms = 0.1;
  std::filesystem::path data_root;
  uint64_t gossip_period_ms = 100;
  uint64_t window_ms = 30000;
  uint32_t writer_id_base = 0;  // worker w stamps with writer_id_base + w
  NodeId manager_id = "manager";
};

// A storage node: shared-nothing workers plus a control loop that applies
// membership and vector changes, runs the gossip timer, and publishes
// window statistics into the store itself.
class StorageNode : public Actor {
 public:
  // fresh_join: a node spawned into a running cluster announces itself and
  // triggers migration; bootstrap nodes start with the agreed initial view.
  StorageNode(const StorageNodeConfig& cfg, MetaViewPtr view,
              const Clock& clock, InMemoryTransport& net, bool fresh_join);

  void tick(uint64_t now_ms) override;

  const NodeId& id() const { return cfg_.id; }
  Tier tier() const { return cfg_.tier; }
  MetaViewPtr view() const { return view_; }

  // Departure protocol: leave the ring, announce, hand every key to its new
  // owners, then report drained so the manager can deallocate.
  void begin_departure();
  bool departing() const { return departing_; }
  bool drained() const;

  // Crash injection: the node stops cold; no handoff, no goodbye. State is
  // lost, matching a real node loss in either tier.
  void kill() { killed_ = true; }
  bool killed() const { return killed_; }

  Worker& worker(size_t i) { return *workers_[i]; }
  size_t worker_count() const { return workers_.size(); }
  uint64_t bytes_used() const;
  uint64_t integrity_faults() const;
  bool quiesced() const;

 private:
  void on_broadcast(const BroadcastMsg& msg);
  void on_internal_response(const ResponseMsg& resp);
  void apply_view(MetaViewPtr next, const std::string* only_key);
  void publish_stats(uint64_t epoch, uint64_t now_ms);
  void internal_put(const std::string& key, const std::string& value);

  StorageNodeConfig cfg_;
  const Clock& clock_;
  InMemoryTransport& net_;
  MetaViewPtr view_;
  std::vector<std::unique_ptr<Worker>> workers_;
  Inbox* control_ = nullptr;
  std::vector<Inbox*> worker_inboxes_;
  uint64_t next_gossip_at_ = 0;
  uint64_t next_window_at_ = 0;
  uint64_t epoch_ = 0;
  uint64_t next_req_id_ = 1;
  bool departing_ = false;
  bool killed_ = false;

  struct PendingPut {
    std::string key;
    std::string value;
    int attempts = 0;
  };
  std::map<uint64_t, PendingPut> pending_puts_;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_NODE_HPP_
