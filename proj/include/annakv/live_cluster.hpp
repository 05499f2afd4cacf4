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

#ifndef INCLUDE_ANNAKV_LIVE_CLUSTER_HPP_
#define INCLUDE_ANNAKV_LIVE_CLUSTER_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "annakv/client.hpp"
#include "annakv/cluster.hpp"
#include "annakv/monitor_node.hpp"
#include "annakv/routing.hpp"
#include "annakv/sim.hpp"

namespace annakv {

// The whole deployment in one process: storage nodes, routing, the
// monitor/policy loop, and the cluster manager, wired over the in-memory
// bus and driven by the cooperative scheduler. The live half of the bench
// and the correctness tests both build on this.
class LiveCluster {
 public:
  LiveCluster(const BenchConfig& cfg, std::filesystem::path data_root,
              InMemoryTransport::Options net_opts, uint64_t tick_ms = 10,
              uint32_t n_routers = 1);

  SimWorld& world() { return world_; }
  ClusterManager* manager() { return manager_; }
  MonitorNode* monitor() { return monitor_; }
  RoutingNode* router(size_t i = 0) { return routers_.at(i); }
  Client* client(size_t i = 0) { return clients_.at(i); }
  size_t client_count() const { return clients_.size(); }
  const std::vector<StorageNode*>& storage_nodes() const { return nodes_; }
  StorageNode* storage(const NodeId& id);

  uint64_t window_ms() const { return window_ms_; }
  uint64_t gossip_ms() const { return gossip_ms_; }

  // Replaces the monitor with a cold instance that rebuilds from metadata.
  MonitorNode* restart_monitor();

  bool settle(uint64_t max_ms = 120000);

  // Every replica cell currently stored for a key, across live nodes.
  std::vector<std::pair<WorkerAddress, LwwCell>> stored_cells(
      const std::string& key);

  // Convenience synchronous ops through a client handle.
  Client::Result sync_op(Client* client, bool get, const std::string& key,
                         const std::string& value = "",
                         uint64_t max_ms = 60000);

 private:
  friend class ClientStatsPublisher;
  StorageNodeConfig node_config_for(Tier tier);

  BenchConfig cfg_;
  std::filesystem::path data_root_;
  SimWorld world_;
  uint64_t window_ms_;
  uint64_t gossip_ms_;
  MonitorNodeConfig monitor_cfg_;
  std::vector<StorageNode*> nodes_;
  std::vector<RoutingNode*> routers_;
  std::vector<Client*> clients_;
  ClusterManager* manager_ = nullptr;
  MonitorNode* monitor_ = nullptr;
  uint32_t writer_base_ = 0;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_LIVE_CLUSTER_HPP_
