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

#include "annakv/client.hpp"

#include <stdexcept>

namespace annakv {

Client::Client(const ClientConfig& cfg, InMemoryTransport& net)
    : cfg_(cfg), net_(net) {
  inbox_ = net_.register_endpoint({cfg_.id, Address::kControlPlane});
}

void Client::start_get(const std::string& key) {
  if (busy()) throw std::logic_error("client handle already has an op");
  if (is_meta_key(key))
    throw std::invalid_argument("reserved metadata prefix");
  Op op;
  op.is_get = true;
  op.key = key;
  op_ = std::move(op);
  ++op_counter_;
}

void Client::start_put(const std::string& key, const std::string& value) {
  if (busy()) throw std::logic_error("client handle already has an op");
  if (is_meta_key(key))
    throw std::invalid_argument("reserved metadata prefix");
  Op op;
  op.is_get = false;
  op.key = key;
  op.payload = value;
  op_ = std::move(op);
  ++op_counter_;
}

std::vector<Client::Result> Client::take_results() {
  std::vector<Result> out;
  out.swap(results_);
  return out;
}

Client::LatencyWindow Client::take_latency_window() {
  LatencyWindow out;
  if (window_latency_count_ > 0) {
    out.mean_ms = window_latency_sum_ / double(window_latency_count_);
    out.count = window_latency_count_;
  }
  window_latency_sum_ = 0;
  window_latency_count_ = 0;
  return out;
}

void Client::complete(Result::Outcome outcome, const std::string& value,
                      Tier served_tier, uint64_t now_ms) {
  Result r;
  r.outcome = outcome;
  r.was_get = op_->is_get;
  r.key = op_->key;
  r.value = value;
  r.latency_ms = double(now_ms - op_->started_at) +
                 at_tier(cfg_.tier_base_latency_ms, served_tier);
  if (outcome != Result::Outcome::kUnavailable) {
    window_latency_sum_ += r.latency_ms;
    ++window_latency_count_;
  }
  results_.push_back(std::move(r));
  op_.reset();
}

void Client::begin_attempt(Op& op, uint64_t now_ms) {
  auto cached = address_cache_.find(op.key);
  if (cached != address_cache_.end()) {
    op.targets = cached->second.addresses;
    op.target_idx = op_counter_ % op.targets.size();  // spread the load
    op.targets_tried = 0;
    issue_request(op, now_ms);
    return;
  }
  issue_resolve(op, now_ms);
}

void Client::issue_resolve(Op& op, uint64_t now_ms) {
  if (cfg_.routers.empty()) {
    complete(Result::Outcome::kUnavailable, "", Tier::kMem, now_ms);
    return;
  }
  RequestMsg req;
  req.req_id = next_req_id_++;
  req.op = RequestMsg::Op::kResolve;
  req.key = op.key;
  req.force_refresh = op.force_refresh;
  req.reply_to = {cfg_.id, Address::kControlPlane};
  op.wait_req_id = req.req_id;
  op.stage = Stage::kResolving;
  op.deadline = now_ms + cfg_.response_timeout_ms;
  const Address& router = cfg_.routers[router_idx_ % cfg_.routers.size()];
  if (!net_.send(router, std::move(req))) {
    ++router_idx_;  // that router is gone; try the next one
    op.deadline = now_ms;
  }
}

void Client::issue_request(Op& op, uint64_t now_ms) {
  RequestMsg req;
  req.req_id = next_req_id_++;
  req.op = op.is_get ? RequestMsg::Op::kGet : RequestMsg::Op::kPut;
  req.key = op.key;
  req.payload = op.payload;
  req.reply_to = {cfg_.id, Address::kControlPlane};
  op.wait_req_id = req.req_id;
  op.stage = Stage::kSending;
  op.deadline = now_ms + cfg_.response_timeout_ms;
  const Address& target = op.targets[op.target_idx % op.targets.size()];
  if (!net_.send(target, std::move(req))) op.deadline = now_ms;  // dead node
}

void Client::retry(Op& op, uint64_t now_ms) {
  address_cache_.erase(op.key);
  op.attempts += 1;
  if (op.attempts >= cfg_.retry_budget) {
    complete(Result::Outcome::kUnavailable, "", Tier::kMem, now_ms);
    return;
  }
  op.force_refresh = true;
  op.stage = Stage::kBackoff;
  op.deadline = now_ms + (cfg_.backoff_start_ms << (op.attempts - 1));
}

void Client::on_response(const ResponseMsg& resp, uint64_t now_ms) {
  if (!op_ || resp.req_id != op_->wait_req_id) return;
  Op& op = *op_;

  if (op.stage == Stage::kResolving) {
    if (resp.status == ResponseMsg::Status::kOk && !resp.addresses.empty()) {
      address_cache_[op.key] = {resp.addresses, resp.meta_version};
      op.force_refresh = false;
      op.targets = resp.addresses;
      op.target_idx = op_counter_ % op.targets.size();
      op.targets_tried = 0;
      issue_request(op, now_ms);
    } else {
      ++router_idx_;
      retry(op, now_ms);
    }
    return;
  }

  if (op.stage != Stage::kSending) return;
  switch (resp.status) {
    case ResponseMsg::Status::kOk: {
      // Merge into the value cache: never surface a dominated cell.
      const LwwCell* winner = nullptr;
      if (resp.cell) {
        auto it = value_cache_.find(op.key);
        if (it == value_cache_.end()) {
          winner = &(value_cache_[op.key] = *resp.cell);
        } else {
          it->second = merge(it->second, *resp.cell);
          winner = &it->second;
        }
      }
      complete(Result::Outcome::kOk, winner ? winner->payload : "",
               resp.served_tier, now_ms);
      return;
    }
    case ResponseMsg::Status::kKeyMissing: {
      op.targets_tried += 1;
      if (op.targets_tried < op.targets.size()) {
        op.target_idx += 1;
        issue_request(op, now_ms);
        return;
      }
      auto cached = value_cache_.find(op.key);
      if (op.is_get && cached != value_cache_.end()) {
        complete(Result::Outcome::kOk, cached->second.payload,
                 resp.served_tier, now_ms);
      } else {
        complete(Result::Outcome::kMissing, "", resp.served_tier, now_ms);
      }
      return;
    }
    case ResponseMsg::Status::kRedirect:
    case ResponseMsg::Status::kError:
      retry(op, now_ms);
      return;
  }
}

void Client::tick(uint64_t now_ms) {
  while (!inbox_->empty()) {
    Message msg = std::move(inbox_->front());
    inbox_->pop_front();
    if (auto* resp = std::get_if<ResponseMsg>(&msg))
      on_response(*resp, now_ms);
    // Broadcasts reaching a client are noise; drop them.
  }

  if (!op_) return;
  Op& op = *op_;
  switch (op.stage) {
    case Stage::kStart:
      op.started_at = now_ms;
      begin_attempt(op, now_ms);
      break;
    case Stage::kBackoff:
      if (now_ms >= op.deadline) begin_attempt(op, now_ms);
      break;
    case Stage::kResolving:
    case Stage::kSending:
      if (now_ms >= op.deadline) retry(op, now_ms);
      break;
  }
}

}  // namespace annakv
