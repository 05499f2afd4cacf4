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

#ifndef INCLUDE_ANNAKV_SIM_HPP_
#define INCLUDE_ANNAKV_SIM_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "annakv/node.hpp"

namespace annakv {

// Cooperative scheduler: a simulated clock, the message bus, and a fixed
// actor order. One step advances the clock a tick, releases due messages,
// then ticks every actor. Fully deterministic under a fixed seed.
class SimWorld {
 public:
  explicit SimWorld(InMemoryTransport::Options net_opts = InMemoryTransport::Options(),
                    uint64_t tick_ms = 10)
      : net_(net_opts), tick_ms_(tick_ms) {}

  ManualClock& clock() { return clock_; }
  InMemoryTransport& net() { return net_; }
  uint64_t now_ms() const { return clock_.now_ms(); }
  uint64_t tick_ms() const { return tick_ms_; }

  template <typename T, typename... Args>
  T* spawn(Args&&... args) {
    auto actor = std::make_unique<T>(std::forward<Args>(args)...);
    T* ptr = actor.get();
    actors_.push_back(std::move(actor));
    return ptr;
  }

  void step() {
    clock_.advance(tick_ms_);
    net_.advance_to(clock_.now_ms());
    // Index loop: actors spawned mid-step join the tail and tick this step.
    for (size_t i = 0; i < actors_.size(); ++i)
      actors_[i]->tick(clock_.now_ms());
    for (auto& service : services_) service();
  }

  void run_for(uint64_t ms) {
    uint64_t deadline = clock_.now_ms() + ms;
    while (clock_.now_ms() < deadline) step();
  }

  void run_until(const std::function<bool()>& done, uint64_t max_ms) {
    uint64_t deadline = clock_.now_ms() + max_ms;
    while (!done() && clock_.now_ms() < deadline) step();
  }

  // Runs until no messages are in flight and every registered quiescence
  // probe reports clean, then one extra gossip period to be sure nothing
  // re-arms. Returns false if the deadline passes first.
  bool settle(uint64_t max_ms, uint64_t gossip_period_ms = 100) {
    uint64_t deadline = clock_.now_ms() + max_ms;
    auto quiet = [&] {
      if (net_.in_flight() > 0) return false;
      for (const auto& probe : quiescence_probes_)
        if (!probe()) return false;
      return true;
    };
    while (clock_.now_ms() < deadline) {
      if (quiet()) {
        uint64_t confirm = clock_.now_ms() + 2 * gossip_period_ms + tick_ms_;
        bool still = true;
        while (clock_.now_ms() < confirm) {
          step();
          if (!quiet()) {
            still = false;
            break;
          }
        }
        if (still) return true;
        continue;
      }
      step();
    }
    return false;
  }

  void add_quiescence_probe(std::function<bool()> probe) {
    quiescence_probes_.push_back(std::move(probe));
  }

  // Lightweight per-step hooks for non-actor endpoints (test clients).
  void add_service(std::function<void()> service) {
    services_.push_back(std::move(service));
  }

 private:
  ManualClock clock_;
  InMemoryTransport net_;
  uint64_t tick_ms_;
  std::vector<std::unique_ptr<Actor>> actors_;
  std::vector<std::function<bool()>> quiescence_probes_;
  std::vector<std::function<void()>> services_;
};

// Test/client-side endpoint that talks to workers directly and pumps the
// world until the response arrives.
class RawEndpoint {
 public:
  RawEndpoint(SimWorld& world, NodeId id)
      : world_(world), id_(std::move(id)) {
    inbox_ = world_.net().register_endpoint({id_, Address::kControlPlane});
    // Broadcasts and stale replies must not sit in our inbox forever; the
    // settle() quiescence check counts them as in-flight traffic.
    world_.add_service([this] {
      Inbox keep;
      for (auto& msg : *inbox_) {
        auto* resp = std::get_if<ResponseMsg>(&msg);
        if (resp && awaiting_ != 0 && resp->req_id == awaiting_)
          keep.push_back(std::move(msg));
      }
      *inbox_ = std::move(keep);
    });
  }

  Address address() const { return {id_, Address::kControlPlane}; }

  std::optional<ResponseMsg> request(const Address& target, RequestMsg req,
                                     uint64_t timeout_ms = 5000) {
    req.req_id = next_id_++;
    req.reply_to = address();
    awaiting_ = req.req_id;
    if (!world_.net().send(target, std::move(req))) {
      awaiting_ = 0;
      return std::nullopt;
    }
    uint64_t deadline = world_.now_ms() + timeout_ms;
    while (world_.now_ms() < deadline) {
      world_.step();
      for (auto it = inbox_->begin(); it != inbox_->end(); ++it) {
        auto* resp = std::get_if<ResponseMsg>(&*it);
        if (resp && resp->req_id == awaiting_) {
          ResponseMsg out = std::move(*resp);
          inbox_->erase(it);
          awaiting_ = 0;
          return out;
        }
      }
    }
    awaiting_ = 0;
    return std::nullopt;
  }

  std::optional<ResponseMsg> put(const Address& target,
                                 const std::string& key,
                                 const std::string& value,
                                 bool internal = false) {
    RequestMsg req;
    req.op = RequestMsg::Op::kPut;
    req.key = key;
    req.payload = value;
    req.internal = internal;
    return request(target, std::move(req));
  }

  std::optional<ResponseMsg> get(const Address& target, const std::string& key,
                                 bool internal = false) {
    RequestMsg req;
    req.op = RequestMsg::Op::kGet;
    req.key = key;
    req.internal = internal;
    return request(target, std::move(req));
  }

 private:
  SimWorld& world_;
  NodeId id_;
  Inbox* inbox_ = nullptr;
  uint64_t next_id_ = 1;
  uint64_t awaiting_ = 0;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_SIM_HPP_
