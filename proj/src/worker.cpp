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

#include "annakv/worker.hpp"

#include <algorithm>

namespace annakv {

Worker::Worker(const WorkerConfig& cfg, const Clock& clock)
    : cfg_(cfg),
      store_(make_store(cfg.tier, cfg.data_root, cfg.node_id, cfg.index)),
      stamps_(clock, cfg.writer_id) {}

std::vector<WorkerAddress> Worker::replicas_or_empty(
    const std::string& key, const MetaView& view) const {
  try {
    return view.replicas_of(key);
  } catch (const std::runtime_error&) {
    return {};
  }
}

void Worker::count_access(const std::string& key) {
  ++access_counts_[key];
  busy_ms_ += cfg_.per_op_busy_ms;
}

ResponseMsg Worker::handle_request(const RequestMsg& req,
                                   const MetaView& view) {
  ResponseMsg resp;
  resp.req_id = req.req_id;
  resp.served_tier = cfg_.tier;
  resp.meta_version = view.version;

  if (req.key.empty() || req.op == RequestMsg::Op::kResolve ||
      (is_meta_key(req.key) && !req.internal)) {
    resp.status = ResponseMsg::Status::kError;
    return resp;
  }

  std::vector<WorkerAddress> replicas;
  try {
    replicas = view.replicas_of(req.key);
  } catch (const std::runtime_error&) {
    resp.status = ResponseMsg::Status::kError;
    return resp;
  }

  WorkerAddress self = address();
  if (std::find(replicas.begin(), replicas.end(), self) == replicas.end()) {
    resp.addresses = view.preferred_addresses(req.key);
    resp.status = resp.addresses.empty() ? ResponseMsg::Status::kError
                                         : ResponseMsg::Status::kRedirect;
    return resp;
  }

  count_access(req.key);

  if (req.op == RequestMsg::Op::kGet) {
    auto cell = store_->get(req.key);
    if (!cell) {
      resp.status = ResponseMsg::Status::kKeyMissing;
      return resp;
    }
    resp.status = ResponseMsg::Status::kOk;
    resp.cell = std::move(*cell);
    return resp;
  }

  LwwCell cell{stamps_.next(), req.payload};
  store_->put(req.key, cell);
  dirty_.insert(req.key);
  resp.status = ResponseMsg::Status::kOk;
  resp.cell = store_->get(req.key);  // the winner after merge
  return resp;
}

void Worker::on_gossip(const GossipMsg& msg, const MetaView& view,
                       Transport& net) {
  WorkerAddress self = address();
  for (const auto& [key, cell] : msg.entries) {
    store_->put(key, cell);
    busy_ms_ += cfg_.per_op_busy_ms;
    // A stale sender may hand us a key we no longer own; keep it safe and
    // forward it onward next round.
    auto replicas = replicas_or_empty(key, view);
    bool mine =
        std::find(replicas.begin(), replicas.end(), self) != replicas.end();
    if (!mine && !replicas.empty()) dirty_.insert(key);
  }
  if (msg.ack_requested) {
    GossipAckMsg ack;
    ack.sender = worker_address(self);
    ack.keys.reserve(msg.entries.size());
    for (const auto& [key, _] : msg.entries) ack.keys.push_back(key);
    net.send(msg.sender, std::move(ack));
  }
}

void Worker::on_gossip_ack(const GossipAckMsg& msg, const MetaView& view) {
  WorkerAddress from{msg.sender.node_id,
                     static_cast<uint32_t>(msg.sender.worker)};
  for (const auto& key : msg.keys) {
    auto it = pending_drop_.find(key);
    if (it == pending_drop_.end()) continue;
    it->second.erase(from);
    if (!it->second.empty()) continue;
    pending_drop_.erase(it);
    // Drop only if nothing new arrived and the view still says hand off.
    if (dirty_.count(key)) continue;
    auto replicas = replicas_or_empty(key, view);
    WorkerAddress self = address();
    bool mine =
        std::find(replicas.begin(), replicas.end(), self) != replicas.end();
    if (!mine) store_->erase(key);
  }
}

void Worker::gossip_round(const MetaView& view, Transport& net) {
  if (dirty_.empty()) return;

  struct Batch {
    GossipMsg msg;
    std::vector<std::string> keys;
  };
  std::map<WorkerAddress, Batch> normal, handoff;
  std::set<std::string> retained;
  std::map<std::string, std::set<WorkerAddress>> handoff_targets;

  WorkerAddress self = address();
  for (const auto& key : dirty_) {
    auto cell = store_->get(key);
    if (!cell) continue;  // dropped or unreadable; nothing to send
    auto replicas = replicas_or_empty(key, view);
    if (replicas.empty()) {
      retained.insert(key);  // cannot place it right now; retry later
      continue;
    }
    bool mine =
        std::find(replicas.begin(), replicas.end(), self) != replicas.end();
    auto& buckets = mine ? normal : handoff;
    for (const auto& target : replicas) {
      if (target == self) continue;
      auto& batch = buckets[target];
      batch.msg.sender = worker_address(self);
      batch.msg.ack_requested = !mine;
      batch.msg.entries.emplace_back(key, *cell);
      batch.keys.push_back(key);
      if (!mine) handoff_targets[key].insert(target);
    }
    busy_ms_ += cfg_.per_op_busy_ms;
  }

  std::set<std::string> failed;
  auto flush = [&](std::map<WorkerAddress, Batch>& buckets) {
    for (auto& [target, batch] : buckets) {
      if (!net.send(worker_address(target), std::move(batch.msg)))
        failed.insert(batch.keys.begin(), batch.keys.end());
    }
  };
  flush(normal);
  flush(handoff);

  dirty_ = retained;
  dirty_.insert(failed.begin(), failed.end());
  for (auto& [key, targets] : handoff_targets) {
    if (failed.count(key)) continue;  // incomplete round; retry instead
    pending_drop_[key] = std::move(targets);
  }
}

void Worker::rescan_key(const std::string& key, const MetaView& old_view,
                        const MetaView& new_view) {
  if (!store_->contains(key)) return;
  auto old_set = replicas_or_empty(key, old_view);
  auto new_set = replicas_or_empty(key, new_view);
  if (new_set.empty()) return;  // unplaceable; wait for the next view
  WorkerAddress self = address();
  bool mine =
      std::find(new_set.begin(), new_set.end(), self) != new_set.end();
  if (mine) pending_drop_.erase(key);  // ownership restored mid-handoff
  if (!mine || new_set != old_set) dirty_.insert(key);
}

void Worker::rescan_ownership(const MetaView& old_view,
                              const MetaView& new_view) {
  for (const auto& key : store_->keys()) rescan_key(key, old_view, new_view);
}

Worker::WindowStats Worker::take_window_stats() {
  WindowStats out;
  out.access_counts = std::move(access_counts_);
  out.busy_ms = busy_ms_;
  access_counts_.clear();
  busy_ms_ = 0;
  return out;
}

}  // namespace annakv
