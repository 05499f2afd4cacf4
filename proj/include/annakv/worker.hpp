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

#ifndef INCLUDE_ANNAKV_WORKER_HPP_
#define INCLUDE_ANNAKV_WORKER_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "annakv/clock.hpp"
#include "annakv/meta_view.hpp"
#include "annakv/store.hpp"
#include "annakv/transport.hpp"

namespace annakv {

struct WorkerConfig {
  NodeId node_id;
  uint32_t index = 0;
  Tier tier = Tier::kMem;
  uint32_t writer_id = 0;  // unique across the cluster
  std::filesystem::path data_root;
  double per_op_busy_ms = 0.1;
};

// A storage worker: private store, multi-master request handling with
// redirection, and the gossip task. Never touches another worker's state;
// everything crosses via the transport.
class Worker {
 public:
  Worker(const WorkerConfig& cfg, const Clock& clock);

  WorkerAddress address() const { return {cfg_.node_id, cfg_.index}; }
  Tier tier() const { return cfg_.tier; }

  ResponseMsg handle_request(const RequestMsg& req, const MetaView& view);

  // Gossip receive path: merges entries, acks handoffs. Entries for keys
  // this worker no longer owns are taken in and re-forwarded next round.
  void on_gossip(const GossipMsg& msg, const MetaView& view, Transport& net);
  void on_gossip_ack(const GossipAckMsg& msg, const MetaView& view);

  // Multicasts dirty keys to their other replicas. Keys this worker no
  // longer owns are sent as handoffs and dropped only after every new owner
  // acknowledges them. Undeliverable entries stay dirty for retry.
  void gossip_round(const MetaView& view, Transport& net);

  // Membership or vector change: marks keys whose replica set changed so
  // the next gossip round migrates them.
  void rescan_ownership(const MetaView& old_view, const MetaView& new_view);
  void rescan_key(const std::string& key, const MetaView& old_view,
                  const MetaView& new_view);

  struct WindowStats {
    std::map<std::string, uint64_t> access_counts;
    double busy_ms = 0;
  };
  WindowStats take_window_stats();

  const TierStore& store() const { return *store_; }
  TierStore& mutable_store() { return *store_; }
  bool quiesced() const { return dirty_.empty() && pending_drop_.empty(); }
  size_t dirty_count() const { return dirty_.size(); }

 private:
  std::vector<WorkerAddress> replicas_or_empty(const std::string& key,
                                               const MetaView& view) const;
  void count_access(const std::string& key);

  WorkerConfig cfg_;
  std::unique_ptr<TierStore> store_;
  TimestampGen stamps_;
  std::set<std::string> dirty_;
  std::map<std::string, std::set<WorkerAddress>> pending_drop_;
  std::map<std::string, uint64_t> access_counts_;
  double busy_ms_ = 0;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_WORKER_HPP_
