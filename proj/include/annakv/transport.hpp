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

#ifndef INCLUDE_ANNAKV_TRANSPORT_HPP_
#define INCLUDE_ANNAKV_TRANSPORT_HPP_

#include <deque>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "annakv/messages.hpp"

namespace annakv {

using Inbox = std::deque<Message>;

// Delivery contract: messages may be delayed, duplicated, and reordered but
// arrive uncorrupted at live endpoints. send returns false when the target
// node is not registered (the stand-in for an unreachable peer).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual bool send(const Address& to, Message msg) = 0;
  // Delivers to the control plane of every registered node except the
  // excluded one, in node-id order.
  virtual void broadcast(const Message& msg, const NodeId& exclude) = 0;
};

// Deterministic in-process bus. Time is driven externally; all sends are
// stamped with the bus clock and released in (deliver_at, send_seq) order.
// Fault injection (duplication, reordering) applies to gossip traffic only;
// request/response and broadcast channels stay FIFO so tests can attribute
// divergence to gossip alone.
class InMemoryTransport : public Transport {
 public:
  struct Options {
    uint64_t delay_ms = 0;
    double gossip_dup_prob = 0.0;
    uint64_t gossip_reorder_ms = 0;
    uint64_t seed = 1;
  };

  InMemoryTransport();
  explicit InMemoryTransport(Options opts);

  Inbox* register_endpoint(const Address& addr);
  void deregister_node(const NodeId& node);
  bool registered(const NodeId& node) const { return nodes_.count(node) > 0; }
  std::vector<NodeId> node_ids() const {
    return {nodes_.begin(), nodes_.end()};
  }

  bool send(const Address& to, Message msg) override;
  void broadcast(const Message& msg, const NodeId& exclude) override;

  // Moves every message due at or before now into its inbox.
  void advance_to(uint64_t now_ms);

  size_t in_flight() const;
  uint64_t dropped_sends() const { return dropped_sends_; }

 private:
  struct Pending {
    uint64_t deliver_at;
    uint64_t seq;
    Address to;
    Message msg;

    bool operator>(const Pending& other) const {
      return std::tie(deliver_at, seq) >
             std::tie(other.deliver_at, other.seq);
    }
  };

  Options opts_;
  uint64_t now_ = 0;
  uint64_t seq_ = 0;
  uint64_t dropped_sends_ = 0;
  std::mt19937_64 rng_;
  std::set<NodeId> nodes_;
  std::map<Address, Inbox> inboxes_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_TRANSPORT_HPP_
