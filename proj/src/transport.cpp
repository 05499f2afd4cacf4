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

#include "annakv/transport.hpp"

namespace annakv {

InMemoryTransport::InMemoryTransport() : InMemoryTransport(Options()) {}

InMemoryTransport::InMemoryTransport(Options opts)
    : opts_(opts), rng_(opts.seed) {}

Inbox* InMemoryTransport::register_endpoint(const Address& addr) {
  nodes_.insert(addr.node_id);
  return &inboxes_[addr];
}

void InMemoryTransport::deregister_node(const NodeId& node) {
  nodes_.erase(node);
  for (auto it = inboxes_.begin(); it != inboxes_.end();) {
    if (it->first.node_id == node)
      it = inboxes_.erase(it);
    else
      ++it;
  }
}

bool InMemoryTransport::send(const Address& to, Message msg) {
  if (!nodes_.count(to.node_id)) {
    ++dropped_sends_;
    return false;
  }
  bool is_gossip = std::holds_alternative<GossipMsg>(msg) ||
                   std::holds_alternative<GossipAckMsg>(msg);
  uint64_t at = now_ + opts_.delay_ms;
  if (is_gossip && opts_.gossip_reorder_ms > 0)
    at += rng_() % (opts_.gossip_reorder_ms + 1);
  if (is_gossip && opts_.gossip_dup_prob > 0) {
    double draw = double(rng_() >> 11) * 0x1.0p-53;
    if (draw < opts_.gossip_dup_prob) {
      uint64_t dup_at = now_ + opts_.delay_ms;
      if (opts_.gossip_reorder_ms > 0)
        dup_at += rng_() % (opts_.gossip_reorder_ms + 1);
      queue_.push({dup_at, seq_++, to, msg});
    }
  }
  queue_.push({at, seq_++, to, std::move(msg)});
  return true;
}

void InMemoryTransport::broadcast(const Message& msg, const NodeId& exclude) {
  for (const NodeId& node : nodes_) {
    if (node == exclude) continue;
    send({node, Address::kControlPlane}, msg);
  }
}

void InMemoryTransport::advance_to(uint64_t now_ms) {
  now_ = now_ms;
  while (!queue_.empty() && queue_.top().deliver_at <= now_ms) {
    Pending p = queue_.top();
    queue_.pop();
    auto it = inboxes_.find(p.to);
    if (it == inboxes_.end()) {
      // Endpoint died while the message was in flight.
      ++dropped_sends_;
      continue;
    }
    it->second.push_back(std::move(p.msg));
  }
}

size_t InMemoryTransport::in_flight() const {
  size_t n = queue_.size();
  for (const auto& [_, inbox] : inboxes_) n += inbox.size();
  return n;
}

}  // namespace annakv
