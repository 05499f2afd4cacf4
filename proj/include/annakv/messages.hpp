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

#ifndef INCLUDE_ANNAKV_MESSAGES_HPP_
#define INCLUDE_ANNAKV_MESSAGES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "annakv/lattice.hpp"
#include "annakv/metadata.hpp"
#include "annakv/tiers.hpp"

namespace annakv {

// Message endpoint. worker_index kControlPlane addresses the node's control
// loop rather than a storage worker.
struct Address {
  static constexpr int32_t kControlPlane = -1;

  NodeId node_id;
  int32_t worker = kControlPlane;

  auto operator<=>(const Address&) const = default;
};

inline Address worker_address(const WorkerAddress& w) {
  return {w.node_id, static_cast<int32_t>(w.worker_index)};
}

struct RequestMsg {
  enum class Op : uint8_t { kGet = 0, kPut = 1, kResolve = 2 };

  uint64_t req_id = 0;
  Op op = Op::kGet;
  bool internal = false;       // system traffic; may touch the meta prefix
  bool force_refresh = false;  // resolve: refresh metadata before answering
  Address reply_to;
  std::string key;
  std::string payload;  // PUT only
};

struct ResponseMsg {
  enum class Status : uint8_t {
    kOk = 0,
    kKeyMissing = 1,
    kRedirect = 2,
    kError = 3
  };

  uint64_t req_id = 0;
  Status status = Status::kOk;
  std::optional<LwwCell> cell;      // GET result; PUT echoes the stamped cell
  std::vector<Address> addresses;   // redirect / resolve answer
  Tier served_tier = Tier::kMem;
  uint64_t meta_version = 0;        // resolve: version of the answering view
};

struct GossipMsg {
  Address sender;
  bool ack_requested = false;  // handoff entries; sender drops after acks
  std::vector<std::pair<std::string, LwwCell>> entries;
};

struct GossipAckMsg {
  Address sender;
  std::vector<std::string> keys;
};

struct BroadcastMsg {
  enum class Event : uint8_t {
    kNodeJoined = 0,
    kNodeDeparted = 1,
    kNodeFailed = 2,
    kRvChanged = 3,
    kHeartbeat = 4,
    kPlan = 5,
    kSuspect = 6
  };

  Event event = Event::kHeartbeat;
  NodeId node_id;  // joined / departed / failed / heartbeat / suspect
  Tier tier = Tier::kMem;
  std::string key;        // rv change
  ReplicationVector rv;   // rv change
  std::string plan_text;  // encoded ActionPlan, policy engine -> manager
};

using Message =
    std::variant<RequestMsg, ResponseMsg, GossipMsg, GossipAckMsg,
                 BroadcastMsg>;

struct Envelope {
  Address to;
  Message msg;
};

// ---------------------------------------------------------------------------
// Wire framing for the socket transport: 1-byte message kind, 4-byte
// big-endian body length, body. Gossip acks travel as GOSSIP frames with the
// ack bit set; resolve traffic as REQUEST/RESPONSE. Cells inside bodies use
// the canonical lattice encoding.

enum class WireKind : uint8_t {
  kRequest = 1,
  kResponse = 2,
  kGossip = 3,
  kBroadcast = 4
};

// The frame body starts with the destination worker index (i32, control
// plane = -1); the destination node is implied by the receiving socket.
std::string encode_frame(const Envelope& env);

// Parses one complete frame. Returns nullopt on malformed input.
std::optional<Envelope> decode_frame(std::string_view frame,
                                     const NodeId& to_node);

// Incremental framing helper: returns the total frame size once the header
// is available, nullopt until then.
std::optional<size_t> frame_size(std::string_view buf);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_MESSAGES_HPP_
