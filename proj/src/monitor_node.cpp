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

#include "annakv/monitor_node.hpp"

namespace annakv {

MonitorNode::MonitorNode(const MonitorNodeConfig& cfg, MetaViewPtr view,
                         InMemoryTransport& net, bool cold_start)
    : cfg_(cfg), net_(net), view_(std::move(view)), rings_ready_(!cold_start) {
  inbox_ = net_.register_endpoint({cfg_.id, Address::kControlPlane});
  if (cold_start) {
    MetaView fresh;
    fresh.k = cfg_.policy.slo.fault_tolerance;
    fresh.rings.local = make_local_rings(cfg_.workers_per_node);
    view_ = make_view(std::move(fresh));
  }
}

void MonitorNode::on_broadcast(const BroadcastMsg& msg) {
  switch (msg.event) {
    case BroadcastMsg::Event::kNodeJoined:
      view_ = with_member(view_, msg.tier, {msg.node_id});
      break;
    case BroadcastMsg::Event::kNodeDeparted:
    case BroadcastMsg::Event::kNodeFailed:
      view_ = without_member(view_, msg.tier, msg.node_id);
      missed_epochs_.erase(msg.node_id);
      suspects_.erase(msg.node_id);
      break;
    case BroadcastMsg::Event::kRvChanged:
      view_ = with_rv(view_, msg.key, msg.rv);
      break;
    default:
      break;
  }
}

void MonitorNode::tick(uint64_t now_ms) {
  if (killed_) return;
  if (started_at_ == 0) started_at_ = now_ms;

  while (!inbox_->empty()) {
    Message msg = std::move(inbox_->front());
    inbox_->pop_front();
    if (auto* b = std::get_if<BroadcastMsg>(&msg)) {
      on_broadcast(*b);
    } else if (auto* resp = std::get_if<ResponseMsg>(&msg)) {
      on_response(*resp, now_ms);
    }
  }

  if (!rings_ready_) {
    // Cold start: the rings come out of the store before anything else.
    if (reads_.empty())
      for (Tier t : kAllTiers)
        issue_read(ReadKind::kRing, std::string(tier_name(t)),
                   ring_meta_key(t));
    return;
  }

  // Collect epoch e once the stats PUT from window e has had a moment to
  // land: at (e+1) * window + offset.
  uint64_t due = (epoch_ + 1) * cfg_.window_ms + cfg_.collect_offset_ms;
  if (!collecting_ && now_ms >= due) begin_collect(now_ms);
  if (collecting_ && now_ms >= collect_deadline_) finish_collect(now_ms);
}

void MonitorNode::begin_collect(uint64_t now_ms) {
  collecting_ = true;
  collect_deadline_ = (epoch_ + 2) * cfg_.window_ms;  // hard stop
  staging_ = ClusterSnapshot{};
  staging_.epoch = epoch_;
  staging_.time_s = double(now_ms) / 1000.0;
  staging_.membership = {};
  for (Tier t : kAllTiers)
    for (const auto& [id, _] : at_tier(view_->rings.global, t).members())
      at_tier(staging_.membership, t).push_back(id);
  staging_.workers_per_node = cfg_.workers_per_node;
  staging_.node_capacity_bytes = cfg_.node_capacity_bytes;
  staging_.bytes_per_key = cfg_.bytes_per_key;
  stats_seen_.clear();

  std::string epoch_str = std::to_string(epoch_);
  for (Tier t : kAllTiers) {
    for (const auto& node : at_tier(staging_.membership, t)) {
      issue_read(ReadKind::kNodeStats, node,
                 meta_key(MetaKind::kNodeStats, {node, epoch_str}));
      issue_read(ReadKind::kKeyStats, node,
                 meta_key(MetaKind::kKeyStats, {node, epoch_str}));
    }
  }
  for (const auto& client : cfg_.client_ids)
    issue_read(ReadKind::kLatency, client,
               meta_key(MetaKind::kLatency, {client, epoch_str}));
  issue_read(ReadKind::kRvIndex, "", rv_index_key());
}

void MonitorNode::issue_read(ReadKind kind, const std::string& subject,
                             const std::string& key) {
  RequestMsg req;
  req.req_id = next_req_id_++;
  req.op = RequestMsg::Op::kGet;
  req.internal = true;
  req.reply_to = {cfg_.id, Address::kControlPlane};
  req.key = key;

  Address target;
  bool have_target = false;
  try {
    auto replicas = view_->replicas_of(key);
    if (!replicas.empty()) {
      target = worker_address(replicas.front());
      have_target = true;
    }
  } catch (const std::runtime_error&) {
  }
  if (!have_target) {
    for (const auto& seed : cfg_.seed_workers)
      if (net_.registered(seed.node_id)) {
        target = seed;
        have_target = true;
        break;
      }
  }
  if (!have_target) return;
  reads_[req.req_id] = {kind, subject, key, 2};
  net_.send(target, std::move(req));
}

void MonitorNode::on_response(const ResponseMsg& resp, uint64_t now_ms) {
  auto it = reads_.find(resp.req_id);
  if (it == reads_.end()) return;
  PendingRead read = std::move(it->second);
  reads_.erase(it);

  if (resp.status == ResponseMsg::Status::kRedirect &&
      read.redirects_left > 0 && !resp.addresses.empty()) {
    RequestMsg req;
    req.req_id = next_req_id_++;
    req.op = RequestMsg::Op::kGet;
    req.internal = true;
    req.reply_to = {cfg_.id, Address::kControlPlane};
    req.key = read.key;
    read.redirects_left -= 1;
    Address target = resp.addresses.front();
    reads_[req.req_id] = std::move(read);
    net_.send(target, std::move(req));
    return;
  }

  bool ok = resp.status == ResponseMsg::Status::kOk && resp.cell;
  switch (read.kind) {
    case ReadKind::kRing: {
      if (!ok) break;
      auto ring = HashRing::from_text(resp.cell->payload);
      auto tier = tier_from_name(read.subject);
      if (ring && tier) {
        MetaView next = *view_;
        at_tier(next.rings.global, *tier) = std::move(*ring);
        next.version = view_->version + 1;
        view_ = make_view(std::move(next));
        if (!at_tier(view_->rings.global, Tier::kMem).empty())
          rings_ready_ = true;
      }
      break;
    }
    case ReadKind::kNodeStats: {
      if (!ok) break;
      auto stats = decode_node_stats(resp.cell->payload, read.subject,
                                     staging_.epoch);
      if (stats) {
        staging_.node_stats.push_back(*stats);
        stats_seen_.insert(read.subject);
      }
      break;
    }
    case ReadKind::kKeyStats: {
      if (!ok) break;
      auto records = decode_key_stats(resp.cell->payload);
      if (records)
        for (const auto& rec : *records) {
          if (is_meta_key(rec.key)) continue;
          staging_.key_counts[rec.key] += double(rec.count);
        }
      break;
    }
    case ReadKind::kLatency: {
      if (!ok) break;
      auto report =
          decode_latency(resp.cell->payload, read.subject, staging_.epoch);
      if (report) staging_.latency_reports.push_back(*report);
      break;
    }
    case ReadKind::kRvIndex: {
      if (!ok || resp.cell->payload.empty()) break;
      std::string_view text = resp.cell->payload;
      size_t start = 0;
      while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string key(text.substr(start, end - start));
        if (!key.empty())
          issue_read(ReadKind::kRv, key, rv_meta_key(key));
        if (end == text.size()) break;
        start = end + 1;
      }
      break;
    }
    case ReadKind::kRv: {
      if (!ok) break;
      auto rv = decode_rv(resp.cell->payload);
      if (rv && *rv != default_vector(view_->k))
        staging_.rv_entries[read.subject] = *rv;
      break;
    }
  }
  maybe_finish(now_ms);
}

void MonitorNode::maybe_finish(uint64_t now_ms) {
  if (collecting_ && reads_.empty()) finish_collect(now_ms);
}

void MonitorNode::finish_collect(uint64_t now_ms) {
  collecting_ = false;
  reads_.clear();

  // A node silent for two consecutive epochs is suspect; the manager
  // cross-checks against its heartbeat view.
  for (Tier t : kAllTiers) {
    for (const auto& node : at_tier(staging_.membership, t)) {
      if (stats_seen_.count(node)) {
        missed_epochs_[node] = 0;
        continue;
      }
      uint64_t missed = ++missed_epochs_[node];
      if (missed >= 2 && !suspects_.count(node)) {
        suspects_.insert(node);
        BroadcastMsg suspect;
        suspect.event = BroadcastMsg::Event::kSuspect;
        suspect.node_id = node;
        net_.send({cfg_.manager, Address::kControlPlane}, suspect);
      }
    }
  }
  staging_.suspects.assign(suspects_.begin(), suspects_.end());

  uint64_t live = 0;
  for (Tier t : kAllTiers) live += at_tier(staging_.membership, t).size();
  if (live > 0) {
    ActionPlan plan = policy_tick(staging_, cfg_.policy, policy_state_);
    if (!plan.empty()) {
      BroadcastMsg msg;
      msg.event = BroadcastMsg::Event::kPlan;
      msg.plan_text = encode_plan(plan);
      net_.send({cfg_.manager, Address::kControlPlane}, msg);
    }
    sent_plans_.push_back(std::move(plan));
  }
  (void)now_ms;
  ++epoch_;
}

}  // namespace annakv
