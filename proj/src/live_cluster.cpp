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

#include "annakv/live_cluster.hpp"

namespace annakv {

namespace {

// Publishes each client's window latency mean into the store so the
// monitor can read it back like any other statistic.
class ClientStatsPublisher : public Actor {
 public:
  ClientStatsPublisher(std::vector<Client*>* clients, ClusterManager* manager,
                       InMemoryTransport& net, uint64_t window_ms)
      : clients_(clients),
        manager_(manager),
        net_(net),
        window_ms_(window_ms) {
    inbox_ = net_.register_endpoint({"stats_publisher",
                                     Address::kControlPlane});
  }

  void tick(uint64_t now_ms) override {
    inbox_->clear();  // internal put acks and stray broadcasts
    uint64_t boundary = now_ms / window_ms_;
    if (boundary == published_) return;
    published_ = boundary;
    uint64_t epoch = boundary - 1;
    for (Client* client : *clients_) {
      auto window = client->take_latency_window();
      if (window.count == 0) continue;
      RequestMsg req;
      req.req_id = next_req_id_++;
      req.op = RequestMsg::Op::kPut;
      req.internal = true;
      req.reply_to = {"stats_publisher", Address::kControlPlane};
      req.key = meta_key(MetaKind::kLatency,
                         {client->id(), std::to_string(epoch)});
      req.payload = encode_latency(window.mean_ms, window.count);
      try {
        auto replicas = manager_->view()->replicas_of(req.key);
        if (!replicas.empty())
          net_.send(worker_address(replicas.front()), std::move(req));
      } catch (const std::runtime_error&) {
      }
    }
  }

 private:
  std::vector<Client*>* clients_;
  ClusterManager* manager_;
  InMemoryTransport& net_;
  uint64_t window_ms_;
  uint64_t published_ = 0;
  uint64_t next_req_id_ = 1;
  Inbox* inbox_ = nullptr;
};

}  // namespace

LiveCluster::LiveCluster(const BenchConfig& cfg,
                         std::filesystem::path data_root,
                         InMemoryTransport::Options net_opts,
                         uint64_t tick_ms, uint32_t n_routers)
    : cfg_(cfg),
      data_root_(std::move(data_root)),
      world_(net_opts, tick_ms),
      window_ms_(uint64_t(cfg.knobs.window_s * 1000)),
      gossip_ms_(uint64_t(cfg.cluster.gossip_period_s * 1000)) {
  uint32_t k = cfg_.slo.fault_tolerance;

  MetaView boot;
  boot.k = k;
  PerTier<uint32_t> workers = {cfg_.cluster.mem_workers(),
                               at_tier(cfg_.cluster.workers_per_node,
                                       Tier::kEbs)};
  boot.rings.local = make_local_rings(workers);
  PerTier<uint32_t> counts = cfg_.cluster.initial_nodes;
  for (uint32_t i = 0; i < at_tier(counts, Tier::kMem); ++i)
    at_tier(boot.rings.global, Tier::kMem).insert({"m" + std::to_string(i)});
  for (uint32_t i = 0; i < at_tier(counts, Tier::kEbs); ++i)
    at_tier(boot.rings.global, Tier::kEbs).insert({"e" + std::to_string(i)});
  MetaViewPtr view0 = make_view(std::move(boot));

  auto spawn_storage = [&](const StorageNodeConfig& node_cfg,
                           MetaViewPtr node_view, bool fresh) {
    StorageNode* node = world_.spawn<StorageNode>(
        node_cfg, std::move(node_view), world_.clock(), world_.net(), fresh);
    nodes_.push_back(node);
    world_.add_quiescence_probe(
        [node] { return node->killed() || node->quiesced(); });
    return node;
  };

  std::vector<StorageNode*> bootstrap_nodes;
  for (uint32_t i = 0; i < at_tier(counts, Tier::kMem); ++i) {
    StorageNodeConfig nc = node_config_for(Tier::kMem);
    nc.id = "m" + std::to_string(i);
    bootstrap_nodes.push_back(spawn_storage(nc, view0, false));
  }
  for (uint32_t i = 0; i < at_tier(counts, Tier::kEbs); ++i) {
    StorageNodeConfig nc = node_config_for(Tier::kEbs);
    nc.id = "e" + std::to_string(i);
    bootstrap_nodes.push_back(spawn_storage(nc, view0, false));
  }

  ClusterManagerConfig mc;
  mc.minimums = {1, k + 1};
  mc.spawn_delay_ms = uint64_t(cfg_.cluster.spawn_delay_s * 1000);
  mc.heartbeat_period_ms = gossip_ms_;
  mc.failure_timeout_periods = cfg_.cluster.failure_timeout_heartbeats;
  mc.cost = cfg_.cluster.cost;
  mc.k = k;
  StorageNodeConfig template_cfg = node_config_for(Tier::kMem);
  manager_ = world_.spawn<ClusterManager>(
      mc, template_cfg, view0, world_.net(),
      [this, spawn_storage](const StorageNodeConfig& nc, MetaViewPtr v) {
        StorageNodeConfig filled = nc;
        if (filled.tier == Tier::kEbs) {
          StorageNodeConfig ebs = node_config_for(Tier::kEbs);
          ebs.id = filled.id;
          ebs.writer_id_base = filled.writer_id_base;
          filled = ebs;
        }
        return spawn_storage(filled, std::move(v), /*fresh_join=*/true);
      });
  for (StorageNode* node : bootstrap_nodes) manager_->adopt(node);

  std::vector<Address> seeds = {{"m0", 0}};
  for (uint32_t r = 0; r < n_routers; ++r) {
    RoutingNodeConfig rc;
    rc.id = "r" + std::to_string(r);
    rc.seed_workers = seeds;
    rc.workers_per_node = workers;
    rc.k = k;
    rc.poll_interval_ms = 5 * window_ms_;
    routers_.push_back(
        world_.spawn<RoutingNode>(rc, view0, world_.net(), false));
  }

  std::vector<Address> router_addrs;
  for (auto* r : routers_)
    router_addrs.push_back({r->id(), Address::kControlPlane});
  for (uint32_t c = 0; c < cfg_.clients; ++c) {
    ClientConfig cc;
    cc.id = "c" + std::to_string(c);
    cc.routers = router_addrs;
    cc.backoff_start_ms = gossip_ms_;
    cc.tier_base_latency_ms = cfg_.capacity.base_latency_ms;
    clients_.push_back(world_.spawn<Client>(cc, world_.net()));
  }

  monitor_cfg_.window_ms = window_ms_;
  monitor_cfg_.collect_offset_ms = 2 * gossip_ms_ + 2 * tick_ms;
  for (auto* c : clients_) monitor_cfg_.client_ids.push_back(c->id());
  monitor_cfg_.policy.knobs = cfg_.knobs;
  monitor_cfg_.policy.slo = cfg_.slo;
  monitor_cfg_.policy.cost = cfg_.cluster.cost;
  monitor_cfg_.policy.grace_period_s = cfg_.grace_period_s();
  monitor_cfg_.policy.elasticity_enabled = cfg_.elasticity_enabled;
  monitor_cfg_.policy.replication_enabled = cfg_.replication_enabled;
  monitor_cfg_.policy.movement_enabled = cfg_.movement_enabled;
  monitor_cfg_.workers_per_node = workers;
  monitor_cfg_.node_capacity_bytes = cfg_.cluster.node_capacity_bytes;
  monitor_cfg_.bytes_per_key = cfg_.workload.value_size + 20;
  monitor_cfg_.seed_workers = seeds;
  monitor_ = world_.spawn<MonitorNode>(monitor_cfg_, view0, world_.net(),
                                       false);

  world_.spawn<ClientStatsPublisher>(&clients_, manager_, world_.net(),
                                     window_ms_);
}

StorageNodeConfig LiveCluster::node_config_for(Tier tier) {
  StorageNodeConfig nc;
  nc.tier = tier;
  nc.worker_count = tier == Tier::kMem
                        ? cfg_.cluster.mem_workers()
                        : at_tier(cfg_.cluster.workers_per_node, Tier::kEbs);
  nc.capacity_bytes = at_tier(cfg_.cluster.node_capacity_bytes, tier);
  double node_rate = at_tier(cfg_.capacity.service_rate, tier);
  nc.per_op_busy_ms = 1000.0 * double(nc.worker_count) / node_rate;
  nc.data_root = data_root_;
  nc.gossip_period_ms = gossip_ms_;
  nc.window_ms = window_ms_;
  nc.writer_id_base = writer_base_;
  writer_base_ += 64;
  return nc;
}

StorageNode* LiveCluster::storage(const NodeId& id) {
  for (auto* node : nodes_)
    if (node->id() == id) return node;
  return nullptr;
}

MonitorNode* LiveCluster::restart_monitor() {
  monitor_->kill();
  MonitorNodeConfig cfg = monitor_cfg_;
  cfg.id = monitor_cfg_.id + "x";
  monitor_cfg_ = cfg;
  monitor_ = world_.spawn<MonitorNode>(cfg, nullptr, world_.net(),
                                       /*cold_start=*/true);
  return monitor_;
}

bool LiveCluster::settle(uint64_t max_ms) {
  return world_.settle(max_ms, gossip_ms_);
}

std::vector<std::pair<WorkerAddress, LwwCell>> LiveCluster::stored_cells(
    const std::string& key) {
  std::vector<std::pair<WorkerAddress, LwwCell>> out;
  for (auto* node : nodes_) {
    if (node->killed()) continue;
    for (size_t w = 0; w < node->worker_count(); ++w) {
      auto cell = node->worker(w).mutable_store().get(key);
      if (cell)
        out.push_back({{node->id(), static_cast<uint32_t>(w)}, *cell});
    }
  }
  return out;
}

Client::Result LiveCluster::sync_op(Client* client, bool get,
                                    const std::string& key,
                                    const std::string& value,
                                    uint64_t max_ms) {
  if (get)
    client->start_get(key);
  else
    client->start_put(key, value);
  world_.run_until([&] { return !client->busy(); }, max_ms);
  auto results = client->take_results();
  if (results.empty()) {
    Client::Result timeout;
    timeout.outcome = Client::Result::Outcome::kUnavailable;
    timeout.key = key;
    return timeout;
  }
  return results.back();
}

}  // namespace annakv
