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

#include "annakv/routing.hpp"

namespace annakv {

RoutingNode::RoutingNode(const RoutingNodeConfig& cfg, MetaViewPtr view,
                         InMemoryTransport& net, bool cold_start)
    : cfg_(cfg), net_(net), view_(std::move(view)), ready_(!cold_start) {
  inbox_ = net_.register_endpoint({cfg_.id, Address::kControlPlane});
  if (cold_start) {
    MetaView fresh;
    fresh.k = cfg_.k;
    fresh.rings.local = make_local_rings(cfg_.workers_per_node);
    view_ = make_view(std::move(fresh));
  }
}

void RoutingNode::tick(uint64_t now_ms) {
  if (killed_) return;
  if (started_at_ == 0) {
    started_at_ = now_ms;
    next_poll_at_ = now_ms + cfg_.poll_interval_ms;
  }
  if (!ready_ && now_ms >= last_bootstrap_attempt_ + cfg_.read_retry_ms) {
    last_bootstrap_attempt_ = now_ms;
    start_ring_reads(now_ms);
  }

  while (!inbox_->empty()) {
    Message msg = std::move(inbox_->front());
    inbox_->pop_front();
    if (auto* req = std::get_if<RequestMsg>(&msg)) {
      if (req->op == RequestMsg::Op::kResolve) on_resolve(*req, now_ms);
    } else if (auto* resp = std::get_if<ResponseMsg>(&msg)) {
      on_read_response(*resp, now_ms);
    } else if (auto* b = std::get_if<BroadcastMsg>(&msg)) {
      on_broadcast(*b);
    }
  }

  // Retry stalled metadata reads (seed died, response lost to a dead node).
  for (auto it = inflight_.begin(); it != inflight_.end();) {
    if (now_ms - it->second > cfg_.read_retry_ms) {
      std::string key = it->first;
      it = inflight_.erase(it);
      read_meta(key, now_ms);
    } else {
      ++it;
    }
  }

  if (ready_ && !parked_.empty()) {
    for (auto& req : parked_) answer(req);
    parked_.clear();
  }

  if (now_ms >= next_poll_at_) {
    start_ring_reads(now_ms);
    next_poll_at_ += cfg_.poll_interval_ms;
  }
}

void RoutingNode::on_resolve(const RequestMsg& req, uint64_t now_ms) {
  ++resolve_count_;
  if (!ready_) {
    parked_.push_back(req);
    return;
  }
  if (req.force_refresh && !is_meta_key(req.key)) {
    // The caller was just redirected: our vector for this key is suspect.
    // Re-read it from the store, then answer.
    uint64_t waiter = next_waiter_id_++;
    waiting_resolves_[waiter] = req;
    refresh_waiters_[req.key].push_back(waiter);
    read_meta(rv_meta_key(req.key), now_ms);
    return;
  }
  answer(req);
}

void RoutingNode::answer(const RequestMsg& req) {
  ResponseMsg resp;
  resp.req_id = req.req_id;
  resp.meta_version = view_->version;
  std::vector<Address> addresses;
  try {
    addresses = view_->preferred_addresses(req.key);
  } catch (const std::runtime_error&) {
  }
  if (addresses.empty()) {
    resp.status = ResponseMsg::Status::kError;
  } else {
    resp.status = ResponseMsg::Status::kOk;
    resp.addresses = std::move(addresses);
  }
  net_.send(req.reply_to, std::move(resp));
}

void RoutingNode::on_broadcast(const BroadcastMsg& msg) {
  switch (msg.event) {
    case BroadcastMsg::Event::kNodeJoined:
      view_ = with_member(view_, msg.tier, {msg.node_id});
      break;
    case BroadcastMsg::Event::kNodeDeparted:
    case BroadcastMsg::Event::kNodeFailed:
      view_ = without_member(view_, msg.tier, msg.node_id);
      break;
    case BroadcastMsg::Event::kRvChanged:
      view_ = with_rv(view_, msg.key, msg.rv);
      break;
    default:
      break;
  }
}

void RoutingNode::start_ring_reads(uint64_t now_ms) {
  for (Tier t : kAllTiers) read_meta(ring_meta_key(t), now_ms);
}

void RoutingNode::read_meta(const std::string& key, uint64_t now_ms) {
  if (inflight_.count(key)) return;
  RequestMsg req;
  req.req_id = next_req_id_++;
  req.op = RequestMsg::Op::kGet;
  req.internal = true;
  req.reply_to = {cfg_.id, Address::kControlPlane};
  req.key = key;

  // Route by our own view when we have one; fall back to the seeds.
  Address target;
  bool sent = false;
  try {
    auto replicas = view_->replicas_of(key);
    if (!replicas.empty()) {
      target = worker_address(replicas.front());
      sent = true;
    }
  } catch (const std::runtime_error&) {
  }
  if (!sent) {
    for (const auto& seed : cfg_.seed_workers) {
      if (net_.registered(seed.node_id)) {
        target = seed;
        sent = true;
        break;
      }
    }
  }
  if (!sent) return;  // nothing alive to ask; retry timer will come back

  reads_[req.req_id] = {key, now_ms, 2};
  inflight_[key] = now_ms;
  net_.send(target, std::move(req));
}

void RoutingNode::on_read_response(const ResponseMsg& resp, uint64_t now_ms) {
  auto it = reads_.find(resp.req_id);
  if (it == reads_.end()) return;
  PendingRead read = it->second;
  reads_.erase(it);

  if (resp.status == ResponseMsg::Status::kRedirect &&
      read.redirects_left > 0 && !resp.addresses.empty()) {
    RequestMsg req;
    req.req_id = next_req_id_++;
    req.op = RequestMsg::Op::kGet;
    req.internal = true;
    req.reply_to = {cfg_.id, Address::kControlPlane};
    req.key = read.key;
    reads_[req.req_id] = {read.key, now_ms, read.redirects_left - 1};
    net_.send(resp.addresses.front(), std::move(req));
    return;
  }
  inflight_.erase(read.key);

  auto parsed = parse_meta_key(read.key);
  if (parsed && parsed->kind == MetaKind::kRing && resp.cell &&
      resp.status == ResponseMsg::Status::kOk) {
    auto ring = HashRing::from_text(resp.cell->payload);
    auto tier = tier_from_name(parsed->parts.at(0));
    if (ring && tier) {
      MetaView next = *view_;
      at_tier(next.rings.global, *tier) = std::move(*ring);
      next.version = view_->version + 1;
      view_ = make_view(std::move(next));
      // Ready once both tiers answered at least once.
      bool all_present = true;
      for (Tier t : kAllTiers)
        if (at_tier(view_->rings.global, t).empty() && t == Tier::kMem)
          all_present = false;
      if (all_present) ready_ = true;
    }
  } else if (parsed && parsed->kind == MetaKind::kRv) {
    const std::string& user_key = parsed->parts.at(0);
    if (resp.status == ResponseMsg::Status::kOk && resp.cell) {
      auto rv = decode_rv(resp.cell->payload);
      if (rv) view_ = with_rv(view_, user_key, *rv);
    } else if (resp.status == ResponseMsg::Status::kKeyMissing) {
      view_ = with_rv(view_, user_key, default_vector(view_->k));
    }
    auto waiters = refresh_waiters_.find(user_key);
    if (waiters != refresh_waiters_.end()) {
      for (uint64_t waiter : waiters->second) {
        auto w = waiting_resolves_.find(waiter);
        if (w == waiting_resolves_.end()) continue;
        answer(w->second);
        waiting_resolves_.erase(w);
      }
      refresh_waiters_.erase(waiters);
    }
  }
}

}  // namespace annakv
