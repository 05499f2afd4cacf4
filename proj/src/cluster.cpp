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

#include "annakv/cluster.hpp"

#include <algorithm>
#include <stdexcept>

namespace annakv {

double hourly_cost(const ClusterShape& shape, const CostModel& model) {
  if (shape.empty()) throw std::invalid_argument("empty cluster shape");
  double total = model.overhead_price;
  for (Tier t : kAllTiers)
    total += double(shape.billed_count(t)) * at_tier(model.node_price, t);
  return total;
}

TopologyLedger::TopologyLedger(PerTier<uint32_t> minimums,
                               uint64_t spawn_delay_ms)
    : minimums_(minimums), spawn_delay_ms_(spawn_delay_ms) {}

NodeId TopologyLedger::allocate_id(Tier tier) {
  const char* prefix = tier == Tier::kMem ? "m" : "e";
  return prefix + std::to_string(at_tier(next_index_, tier)++);
}

void TopologyLedger::bootstrap(Tier tier, const NodeId& id) {
  handles_[id] = {id, tier, NodeHandle::State::kLive, 0};
  // Keep generated ids clear of bootstrap ones.
  at_tier(next_index_, tier) =
      std::max<uint32_t>(at_tier(next_index_, tier),
                         static_cast<uint32_t>(handles_.size()) + 16);
}

TopologyLedger::Applied TopologyLedger::apply_plan(const ActionPlan& plan,
                                                   uint64_t now_ms) {
  Applied out;
  ClusterShape current = shape();

  for (Tier t : kAllTiers) {
    uint32_t want = at_tier(plan.add_nodes, t);
    uint32_t pending = at_tier(current.pending, t);
    // An identical in-flight request is a no-op.
    uint32_t effective = want > pending ? want - pending : 0;
    for (uint32_t i = 0; i < effective; ++i) {
      NodeId id = allocate_id(t);
      handles_[id] = {id, t, NodeHandle::State::kPending,
                      now_ms + spawn_delay_ms_};
    }
  }

  PerTier<uint32_t> will_remain;
  for (Tier t : kAllTiers) at_tier(will_remain, t) = current.live_count(t);
  for (const auto& victim : plan.remove_nodes) {
    auto it = handles_.find(victim);
    if (it == handles_.end() ||
        it->second.state != NodeHandle::State::kLive) {
      out.dropped.push_back("remove " + victim + ": not a live node");
      continue;
    }
    Tier t = it->second.tier;
    if (at_tier(will_remain, t) <= at_tier(minimums_, t)) {
      out.dropped.push_back("remove " + victim + ": tier at minimum");
      continue;
    }
    at_tier(will_remain, t) -= 1;
    it->second.state = NodeHandle::State::kDeparting;
    out.departures.push_back(victim);
  }
  return out;
}

NodeId TopologyLedger::spawn_replacement(Tier tier, uint64_t now_ms) {
  NodeId id = allocate_id(tier);
  handles_[id] = {id, tier, NodeHandle::State::kPending,
                  now_ms + spawn_delay_ms_};
  return id;
}

std::vector<NodeId> TopologyLedger::due_spawns(uint64_t now_ms) const {
  std::vector<NodeId> out;
  for (const auto& [id, handle] : handles_)
    if (handle.state == NodeHandle::State::kPending &&
        now_ms >= handle.spawn_deadline_ms)
      out.push_back(id);
  return out;
}

void TopologyLedger::mark_live(const NodeId& id) {
  auto it = handles_.find(id);
  if (it != handles_.end()) it->second.state = NodeHandle::State::kLive;
}

bool TopologyLedger::fail(const NodeId& id) {
  auto it = handles_.find(id);
  if (it == handles_.end() || it->second.state == NodeHandle::State::kFailed)
    return false;
  it->second.state = NodeHandle::State::kFailed;
  return true;
}

void TopologyLedger::complete_departure(const NodeId& id) {
  handles_.erase(id);
}

ClusterShape TopologyLedger::shape() const {
  ClusterShape out;
  for (const auto& [id, handle] : handles_) {
    if (handle.state == NodeHandle::State::kLive)
      at_tier(out.live, handle.tier).push_back(id);
    else if (handle.state == NodeHandle::State::kPending)
      at_tier(out.pending, handle.tier) += 1;
  }
  return out;
}

bool TopologyLedger::degraded() const {
  ClusterShape s = shape();
  for (Tier t : kAllTiers)
    if (s.live_count(t) < at_tier(minimums_, t)) return true;
  return false;
}

// ---------------------------------------------------------------------------

ClusterManager::ClusterManager(const ClusterManagerConfig& cfg,
                               const StorageNodeConfig& node_template,
                               MetaViewPtr view, InMemoryTransport& net,
                               NodeFactory factory)
    : cfg_(cfg),
      node_template_(node_template),
      net_(net),
      factory_(std::move(factory)),
      view_(std::move(view)),
      ledger_(cfg.minimums, cfg.spawn_delay_ms) {
  inbox_ = net_.register_endpoint({cfg_.id, Address::kControlPlane});
}

void ClusterManager::adopt(StorageNode* node) {
  registry_[node->id()] = node;
  ledger_.bootstrap(node->tier(), node->id());
  last_heartbeat_[node->id()] = 0;
}

void ClusterManager::tick(uint64_t now_ms) {
  if (!initialized_) {
    initialized_ = true;
    write_ring_meta();
    write_rv_index();
  }

  while (!inbox_->empty()) {
    Message msg = std::move(inbox_->front());
    inbox_->pop_front();
    auto* b = std::get_if<BroadcastMsg>(&msg);
    if (!b) continue;  // plan/heartbeat traffic is all broadcast-typed
    switch (b->event) {
      case BroadcastMsg::Event::kHeartbeat:
        last_heartbeat_[b->node_id] = now_ms;
        break;
      case BroadcastMsg::Event::kPlan: {
        auto plan = decode_plan(b->plan_text);
        if (plan) execute(*plan, now_ms);
        break;
      }
      case BroadcastMsg::Event::kSuspect:
        suspects_.insert(b->node_id);
        break;
      case BroadcastMsg::Event::kNodeJoined:
        view_ = with_member(view_, b->tier, {b->node_id});
        write_ring_meta();
        break;
      case BroadcastMsg::Event::kNodeDeparted:
        view_ = without_member(view_, b->tier, b->node_id);
        write_ring_meta();
        break;
      default:
        break;
    }
  }

  detect_failures(now_ms);
  spawn_due(now_ms);

  // Finish departures whose stores have drained.
  for (auto it = registry_.begin(); it != registry_.end();) {
    StorageNode* node = it->second;
    if (node->departing() && node->drained()) {
      net_.deregister_node(node->id());
      ledger_.complete_departure(node->id());
      last_heartbeat_.erase(node->id());
      node->kill();
      it = registry_.erase(it);
    } else {
      ++it;
    }
  }
}

void ClusterManager::add(Tier tier, uint32_t count, uint64_t now_ms) {
  ActionPlan plan;
  at_tier(plan.add_nodes, tier) = count;
  execute(plan, now_ms);
}

void ClusterManager::remove(const NodeId& id, uint64_t now_ms) {
  ActionPlan plan;
  plan.remove_nodes.push_back(id);
  execute(plan, now_ms);
}

void ClusterManager::fail_node(const NodeId& id, uint64_t now_ms) {
  auto it = registry_.find(id);
  if (it == registry_.end()) return;
  it->second->kill();
  net_.deregister_node(id);
  // Peers will notice the silence; detection runs on the usual timeout.
  (void)now_ms;
}

void ClusterManager::execute(const ActionPlan& plan, uint64_t now_ms) {
  // Vector edits first: movement and replication are metadata writes.
  for (const auto& key : plan.promotions) {
    if (is_meta_key(key)) continue;
    ReplicationVector current = view_->rv_of(key);
    apply_rv_change(key, promoted_vector(current, cfg_.k), now_ms);
  }
  for (const auto& key : plan.demotions) {
    if (is_meta_key(key)) continue;
    apply_rv_change(key, demoted_vector(cfg_.k), now_ms);
  }
  for (const auto& [key, rv] : plan.rv_updates) {
    if (is_meta_key(key)) continue;
    if (!satisfies_fault_floor(rv, cfg_.k)) {
      log_.push_back("rv update for " + key + " rejected: fault floor");
      continue;
    }
    apply_rv_change(key, rv, now_ms);
  }

  auto applied = ledger_.apply_plan(plan, now_ms);
  for (auto& line : applied.dropped) log_.push_back(std::move(line));
  for (const auto& victim : applied.departures) {
    auto it = registry_.find(victim);
    if (it != registry_.end()) it->second->begin_departure();
  }
}

void ClusterManager::apply_rv_change(const std::string& key,
                                     const ReplicationVector& rv,
                                     uint64_t now_ms) {
  (void)now_ms;
  if (view_->rv_of(key) == rv) return;  // no-op update: no traffic
  view_ = with_rv(view_, key, rv);

  // The authoritative copy lives in the store; the multicast refreshes
  // worker caches so migration starts without waiting on reads.
  internal_put(rv_meta_key(key), encode_rv(rv));
  BroadcastMsg change;
  change.event = BroadcastMsg::Event::kRvChanged;
  change.key = key;
  change.rv = rv;
  net_.broadcast(change, cfg_.id);

  bool is_default = rv == default_vector(cfg_.k);
  bool changed = is_default ? rv_index_.erase(key) > 0
                            : rv_index_.insert(key).second;
  if (changed) write_rv_index();
}

void ClusterManager::detect_failures(uint64_t now_ms) {
  uint64_t timeout =
      uint64_t(cfg_.failure_timeout_periods) * cfg_.heartbeat_period_ms;
  std::vector<NodeId> dead;
  for (const auto& [id, handle] : ledger_.handles()) {
    if (handle.state != NodeHandle::State::kLive) continue;
    auto hb = last_heartbeat_.find(id);
    uint64_t last = hb == last_heartbeat_.end() ? 0 : hb->second;
    if (now_ms > last + timeout && now_ms > timeout) dead.push_back(id);
  }
  for (const auto& id : dead) {
    if (!ledger_.fail(id)) continue;
    log_.push_back("node " + id + " failed: heartbeat timeout");
    auto it = registry_.find(id);
    if (it != registry_.end()) {
      it->second->kill();
      registry_.erase(it);
    }
    net_.deregister_node(id);
    last_heartbeat_.erase(id);
    suspects_.erase(id);

    Tier tier = Tier::kMem;
    auto handle = ledger_.handles().find(id);
    if (handle != ledger_.handles().end()) tier = handle->second.tier;
    view_ = without_member(view_, tier, id);
    BroadcastMsg failed;
    failed.event = BroadcastMsg::Event::kNodeFailed;
    failed.node_id = id;
    failed.tier = tier;
    net_.broadcast(failed, cfg_.id);
    write_ring_meta();

    ledger_.spawn_replacement(tier, now_ms);
    if (ledger_.degraded())
      log_.push_back("tier below minimum after failure of " + id);
  }
}

void ClusterManager::spawn_due(uint64_t now_ms) {
  for (const auto& id : ledger_.due_spawns(now_ms)) {
    StorageNodeConfig cfg = node_template_;
    cfg.id = id;
    auto handle = ledger_.handles().find(id);
    cfg.tier = handle->second.tier;
    cfg.writer_id_base = next_writer_base_;
    next_writer_base_ += 64;
    StorageNode* node = factory_(cfg, view_);
    registry_[id] = node;
    last_heartbeat_[id] = now_ms;
    ledger_.mark_live(id);
    // The joiner's presence broadcast updates everyone, ourselves included.
  }
}

void ClusterManager::write_ring_meta() {
  for (Tier t : kAllTiers)
    internal_put(ring_meta_key(t),
                 at_tier(view_->rings.global, t).to_text());
}

void ClusterManager::write_rv_index() {
  std::string value;
  for (const auto& key : rv_index_) {
    if (!value.empty()) value += '\n';
    value += key;
  }
  internal_put(rv_index_key(), value);
}

void ClusterManager::internal_put(const std::string& key,
                                  const std::string& value) {
  RequestMsg req;
  req.req_id = next_req_id_++;
  req.op = RequestMsg::Op::kPut;
  req.internal = true;
  req.reply_to = {cfg_.id, Address::kControlPlane};
  req.key = key;
  req.payload = value;
  try {
    auto replicas = view_->replicas_of(key);
    if (replicas.empty()) return;
    net_.send(worker_address(replicas.front()), std::move(req));
  } catch (const std::runtime_error&) {
    // No live metadata tier; the next membership event rewrites anyway.
  }
}

}  // namespace annakv
