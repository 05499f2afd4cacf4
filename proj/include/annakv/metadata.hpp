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

#ifndef INCLUDE_ANNAKV_METADATA_HPP_
#define INCLUDE_ANNAKV_METADATA_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "annakv/tiers.hpp"

namespace annakv {

// Per-key replica placement: node_replicas[i] nodes of tier i, each holding
// the key on worker_replicas[i] of its worker threads.
struct ReplicationVector {
  PerTier<uint32_t> node_replicas = {0, 0};   // R
  PerTier<uint32_t> worker_replicas = {1, 1};  // T

  bool operator==(const ReplicationVector&) const = default;

  uint32_t r(Tier t) const { return at_tier(node_replicas, t); }
  uint32_t t(Tier t) const { return at_tier(worker_replicas, t); }

  uint32_t total_node_replicas() const {
    uint32_t sum = 0;
    for (uint32_t v : node_replicas) sum += v;
    return sum;
  }
};

// The vector every key starts with: one memory replica, k disk replicas,
// no intra-node replication.
inline ReplicationVector default_vector(uint32_t k) {
  ReplicationVector rv;
  rv.node_replicas = {1, k};
  rv.worker_replicas = {1, 1};
  return rv;
}

// Metadata keys are pinned to the memory tier at a constant factor and are
// never moved by the policy engine.
inline constexpr uint32_t kMetadataMemReplicas = 3;

inline ReplicationVector metadata_vector() {
  ReplicationVector rv;
  rv.node_replicas = {kMetadataMemReplicas, 0};
  rv.worker_replicas = {1, 1};
  return rv;
}

// Fault-tolerance floor for user keys: at least k+1 replicas across tiers,
// and positive worker replication everywhere.
inline bool satisfies_fault_floor(const ReplicationVector& rv, uint32_t k) {
  if (rv.total_node_replicas() < k + 1) return false;
  for (uint32_t t : rv.worker_replicas)
    if (t == 0) return false;
  return true;
}

// Canonical text form "M:<R_MEM>,<T_MEM>;E:<R_EBS>,<T_EBS>".
std::string encode_rv(const ReplicationVector& rv);
std::optional<ReplicationVector> decode_rv(std::string_view text);

// ---------------------------------------------------------------------------
// Reserved-key scheme: all system metadata lives inside the store itself
// under one reserved prefix. User operations on that prefix are rejected at
// the client API.

inline constexpr std::string_view kMetaPrefix = "__anna_meta__/";

inline bool is_meta_key(std::string_view key) {
  return key.substr(0, kMetaPrefix.size()) == kMetaPrefix;
}

enum class MetaKind : uint8_t { kRing, kRv, kNodeStats, kKeyStats, kLatency };

// "__anna_meta__/<kind tag>/<parts joined by '/'>". Parts must not contain
// '/' or the reserved prefix; the mapping is bijective over valid inputs.
std::string meta_key(MetaKind kind, const std::vector<std::string>& parts);

struct ParsedMetaKey {
  MetaKind kind;
  std::vector<std::string> parts;
};
std::optional<ParsedMetaKey> parse_meta_key(std::string_view key);

// Conventional instances.
inline std::string ring_meta_key(Tier t) {
  return meta_key(MetaKind::kRing, {std::string(tier_name(t))});
}
inline std::string rv_meta_key(const std::string& user_key) {
  return meta_key(MetaKind::kRv, {user_key});
}
// Directory of keys carrying non-default vectors, so a fresh monitor can
// rebuild its vector view from the store alone.
inline std::string rv_index_key() {
  return std::string(kMetaPrefix) + "rv_index";
}

// ---------------------------------------------------------------------------
// Statistics records, published by storage nodes once per monitoring window
// as whole-window PUTs to epoch-suffixed keys.

struct KeyAccessRecord {
  std::string key;
  uint64_t count = 0;
};

struct NodeStats {
  NodeId node_id;
  Tier tier = Tier::kMem;
  double occupancy = 0.0;         // fraction of window spent serving
  double storage_fraction = 0.0;  // fraction of capacity used
  uint64_t epoch = 0;
};

struct LatencyReport {
  std::string client_id;
  uint64_t epoch = 0;
  double mean_latency_ms = 0.0;
  uint64_t request_count = 0;
};

// Value encodings. Node stats: "<tier>,<occupancy>,<storage_fraction>".
// Key stats: newline-separated "key,count". Latency: "<mean_ms>,<count>".
std::string encode_node_stats(const NodeStats& s);
std::optional<NodeStats> decode_node_stats(std::string_view text,
                                           const NodeId& node_id,
                                           uint64_t epoch);

std::string encode_key_stats(const std::vector<KeyAccessRecord>& records);
std::optional<std::vector<KeyAccessRecord>> decode_key_stats(
    std::string_view text);

std::string encode_latency(double mean_ms, uint64_t request_count);
std::optional<LatencyReport> decode_latency(std::string_view text,
                                            const std::string& client_id,
                                            uint64_t epoch);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_METADATA_HPP_
