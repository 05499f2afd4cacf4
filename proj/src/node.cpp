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

#include "annakv/node.hpp"

namespace annakv {

StorageNode::StorageNode(const StorageNodeConfig& cfg, MetaViewPtr view,
                         const Clock& clock, InMemoryTransport& net,
                         bool fresh_join)
    : cfg_(cfg), clock_(clock), net_(net), view_(std::move(view)) {
  control_ = net_.register_endpoint({cfg_.id, Address::kControlPlane});
  for (uint32_t w = 0; w < cfg_.worker_count; ++w) {
    WorkerConfig wc;
    wc.node_id = cfg_.id;
    wc.index = w;
    wc.tier = cfg_.tier;
    wc.writer_id = cfg_.writer_id_base + w;
    wc.data_root = cfg_.data_root;
    wc.per_op_busy_ms = cfg_.per_op_busy_ms;
    workers_.push_back(std::make_unique<Worker>(wc, clock));
    worker_inboxes_.push_back(
        net_.register_endpoint({cfg_.id, static_cast<int32_t>(w)}));
  }

  uint64_t now = clock.now_ms();
  next_gossip_at_ = now + cfg_.gossip_period_ms;
  next_window_at_ = now + cfg_.window_ms;

  if (fresh_join) {
    // Join protocol: add ourselves to the tier ring we were handed and
    // announce to everyone; peers compute the ownership diff and gossip the
    // affected keys over.
    if (!at_tier(view_->rings.global, cfg_.tier).contains(cfg_.id))
      view_ = with_member(view_, cfg_.tier, {cfg_.id});
    BroadcastMsg hello;
    hello.event = BroadcastMsg::Event::kNodeJoined;
    hello.node_id = cfg_.id;
    hello.tier = cfg_.tier;
    net_.broadcast(hello, cfg_.id);
  }
}

void StorageNode::tick(uint64_t now_ms) {
  if (killed_) return;
  while (!control_->empty()) {
    Message msg = std::move(control_->front());
    control_->pop_front();
    if (auto* b = std::get_if<BroadcastMsg>(&msg)) {
      on_broadcast(*b);
    } else if (auto* r = std::get_if<ResponseMsg>(&msg)) {
      on_internal_response(*r);
    }
  }

  for (size_t w = 0; w < workers_.size(); ++w) {
    Inbox* inbox = worker_inboxes_[w];
    Worker& worker = *workers_[w];
    while (!inbox->empty()) {
      Message msg = std::move(inbox->front());
      inbox->pop_front();
      if (auto* req = std::get_if<RequestMsg>(&msg)) {
        ResponseMsg resp = worker.handle_request(*req, *view_);
        net_.send(req->reply_to, std::move(resp));
      } else if (auto* gossip = std::get_if<GossipMsg>(&msg)) {
        worker.on_gossip(*gossip, *view_, net_);
      } else if (auto* ack = std::get_if<GossipAckMsg>(&msg)) {
        worker.on_gossip_ack(*ack, *view_);
      }
    }
  }

  if (now_ms >= next_gossip_at_) {
    for (auto& worker : workers_) worker->gossip_round(*view_, net_);
    BroadcastMsg hb;
    hb.event = BroadcastMsg::Event::kHeartbeat;
    hb.node_id = cfg_.id;
    hb.tier = cfg_.tier;
    net_.send({cfg_.manager_id, Address::kControlPlane}, hb);
    next_gossip_at_ += cfg_.gossip_period_ms;
  }

  if (now_ms >= next_window_at_ && !departing_) {
    publish_stats(epoch_, now_ms);
    ++epoch_;
    next_window_at_ += cfg_.window_ms;
  }
}

void StorageNode::begin_departure() {
  if (departing_) return;
  departing_ = true;
  apply_view(without_member(view_, cfg_.tier, cfg_.id), nullptr);
  BroadcastMsg bye;
  bye.event = BroadcastMsg::Event::kNodeDeparted;
  bye.node_id = cfg_.id;
  bye.tier = cfg_.tier;
  net_.broadcast(bye, cfg_.id);
}

bool StorageNode::drained() const {
  for (const auto& worker : workers_)
    if (!worker->quiesced() || worker->store().size() > 0) return false;
  return true;
}

bool StorageNode::quiesced() const {
  for (const auto& worker : workers_)
    if (!worker->quiesced()) return false;
  return true;
}

uint64_t StorageNode::bytes_used() const {
  uint64_t total = 0;
  for (const auto& worker : workers_) total += worker->store().bytes_used();
  return total;
}

uint64_t StorageNode::integrity_faults() const {
  uint64_t total = 0;
  for (const auto& worker : workers_)
    total += worker->store().integrity_faults();
  return total;
}

void StorageNode::on_broadcast(const BroadcastMsg& msg) {
  switch (msg.event) {
    case BroadcastMsg::Event::kNodeJoined:
      if (msg.node_id == cfg_.id) return;
      apply_view(with_member(view_, msg.tier, {msg.node_id}), nullptr);
      break;
    case BroadcastMsg::Event::kNodeDeparted:
    case BroadcastMsg::Event::kNodeFailed:
      if (msg.node_id == cfg_.id) return;
      apply_view(without_member(view_, msg.tier, msg.node_id), nullptr);
      break;
    case BroadcastMsg::Event::kRvChanged:
      apply_view(with_rv(view_, msg.key, msg.rv), &msg.key);
      break;
    default:
      break;  // heartbeats and plans are manager traffic
  }
}

void StorageNode::apply_view(MetaViewPtr next, const std::string* only_key) {
  MetaViewPtr old = view_;
  view_ = std::move(next);
  for (auto& worker : workers_) {
    if (only_key)
      worker->rescan_key(*only_key, *old, *view_);
    else
      worker->rescan_ownership(*old, *view_);
  }
}

void StorageNode::publish_stats(uint64_t epoch, uint64_t) {
  std::map<std::string, uint64_t> counts;
  double busy_ms = 0;
  for (auto& worker : workers_) {
    auto stats = worker->take_window_stats();
    busy_ms += stats.busy_ms;
    for (const auto& [key, n] : stats.access_counts) counts[key] += n;
  }
  double window_capacity_ms =
      static_cast<double>(cfg_.window_ms) * workers_.size();
  NodeStats stats;
  stats.node_id = cfg_.id;
  stats.tier = cfg_.tier;
  stats.occupancy = std::min(1.0, busy_ms / window_capacity_ms);
  stats.storage_fraction =
      std::min(1.0, static_cast<double>(bytes_used()) /
                        static_cast<double>(cfg_.capacity_bytes));
  stats.epoch = epoch;

  std::string epoch_str = std::to_string(epoch);
  internal_put(meta_key(MetaKind::kNodeStats, {cfg_.id, epoch_str}),
               encode_node_stats(stats));

  std::vector<KeyAccessRecord> records;
  records.reserve(counts.size());
  for (const auto& [key, n] : counts) records.push_back({key, n});
  internal_put(meta_key(MetaKind::kKeyStats, {cfg_.id, epoch_str}),
               encode_key_stats(records));
}

void StorageNode::internal_put(const std::string& key,
                               const std::string& value) {
  RequestMsg req;
  req.req_id = next_req_id_++;
  req.op = RequestMsg::Op::kPut;
  req.internal = true;
  req.reply_to = {cfg_.id, Address::kControlPlane};
  req.key = key;
  req.payload = value;

  std::vector<WorkerAddress> replicas;
  try {
    replicas = view_->replicas_of(key);
  } catch (const std::runtime_error&) {
    return;  // no live metadata tier right now; next window retries
  }
  if (replicas.empty()) return;
  pending_puts_[req.req_id] = {key, value, 1};
  net_.send(worker_address(replicas.front()), std::move(req));
}

void StorageNode::on_internal_response(const ResponseMsg& resp) {
  auto it = pending_puts_.find(resp.req_id);
  if (it == pending_puts_.end()) return;
  PendingPut pending = std::move(it->second);
  pending_puts_.erase(it);
  if (resp.status == ResponseMsg::Status::kOk || pending.attempts >= 3)
    return;

  // Stale view got us redirected; follow the fresh addresses once.
  RequestMsg req;
  req.req_id = next_req_id_++;
  req.op = RequestMsg::Op::kPut;
  req.internal = true;
  req.reply_to = {cfg_.id, Address::kControlPlane};
  req.key = pending.key;
  req.payload = pending.value;
  Address target;
  if (resp.status == ResponseMsg::Status::kRedirect &&
      !resp.addresses.empty()) {
    target = resp.addresses.front();
  } else {
    try {
      auto replicas = view_->replicas_of(pending.key);
      if (replicas.empty()) return;
      target = worker_address(replicas.front());
    } catch (const std::runtime_error&) {
      return;
    }
  }
  pending.attempts += 1;
  pending_puts_[req.req_id] = std::move(pending);
  net_.send(target, std::move(req));
}

}  // namespace annakv
