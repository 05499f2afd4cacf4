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

#ifndef INCLUDE_ANNAKV_CLIENT_HPP_
#define INCLUDE_ANNAKV_CLIENT_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "annakv/node.hpp"

namespace annakv {

struct ClientConfig {
  std::string id = "c0";
  std::vector<Address> routers;
  uint32_t retry_budget = 4;
  uint64_t backoff_start_ms = 100;  // one gossip period
  uint64_t response_timeout_ms = 500;
  PerTier<double> tier_base_latency_ms = {1.0, 20.0};
};

// The client library: caches addresses from the routing service, retries
// through redirects and invalidations with doubling backoff, and merges GET
// results into a value cache so reads never go backwards.
class Client : public Actor {
 public:
  struct Result {
    enum class Outcome : uint8_t { kOk, kMissing, kUnavailable };
    Outcome outcome = Outcome::kOk;
    bool was_get = true;
    std::string key;
    std::string value;
    double latency_ms = 0;
  };

  Client(const ClientConfig& cfg, InMemoryTransport& net);

  // One outstanding operation per handle. Reserved metadata keys are
  // rejected up front.
  void start_get(const std::string& key);
  void start_put(const std::string& key, const std::string& value);
  bool busy() const { return op_.has_value(); }

  std::vector<Result> take_results();

  struct LatencyWindow {
    double mean_ms = 0;
    uint64_t count = 0;
  };
  LatencyWindow take_latency_window();

  void tick(uint64_t now_ms) override;

  bool has_cached_address(const std::string& key) const {
    return address_cache_.count(key) > 0;
  }
  std::optional<LwwCell> cached_value(const std::string& key) const {
    auto it = value_cache_.find(key);
    if (it == value_cache_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& id() const { return cfg_.id; }

 private:
  struct AddressSet {
    std::vector<Address> addresses;
    uint64_t version = 0;
  };

  enum class Stage : uint8_t { kStart, kResolving, kSending, kBackoff };

  struct Op {
    bool is_get = true;
    std::string key;
    std::string payload;
    Stage stage = Stage::kStart;
    uint32_t attempts = 0;
    uint64_t started_at = 0;
    uint64_t wait_req_id = 0;
    uint64_t deadline = 0;      // response timeout or backoff end
    bool force_refresh = false;
    std::vector<Address> targets;
    size_t target_idx = 0;
    size_t targets_tried = 0;
  };

  void begin_attempt(Op& op, uint64_t now_ms);
  void issue_request(Op& op, uint64_t now_ms);
  void issue_resolve(Op& op, uint64_t now_ms);
  void retry(Op& op, uint64_t now_ms);
  void complete(Result::Outcome outcome, const std::string& value,
                Tier served_tier, uint64_t now_ms);
  void on_response(const ResponseMsg& resp, uint64_t now_ms);

  ClientConfig cfg_;
  InMemoryTransport& net_;
  Inbox* inbox_ = nullptr;
  std::optional<Op> op_;
  std::map<std::string, AddressSet> address_cache_;
  std::map<std::string, LwwCell> value_cache_;
  std::vector<Result> results_;
  uint64_t next_req_id_ = 1;
  uint64_t op_counter_ = 0;
  size_t router_idx_ = 0;
  double window_latency_sum_ = 0;
  uint64_t window_latency_count_ = 0;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_CLIENT_HPP_
