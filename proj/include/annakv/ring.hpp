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

#ifndef INCLUDE_ANNAKV_RING_HPP_
#define INCLUDE_ANNAKV_RING_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "annakv/hash.hpp"
#include "annakv/metadata.hpp"
#include "annakv/tiers.hpp"

namespace annakv {

struct RingMember {
  std::string member_id;
  uint32_t weight = kDefaultNodeWeight;  // virtual points

  static constexpr uint32_t kDefaultNodeWeight = 100;
  static constexpr uint32_t kDefaultWorkerWeight = 16;
};

// Consistent hashing with virtual nodes. Value semantics: updates copy and
// modify, readers hold snapshots, so rings are safe to send between workers.
class HashRing {
 public:
  explicit HashRing(HashFn hash = ring_hash64) : hash_(hash) {}

  // All of the member's virtual points are placed at
  // hash(member_id ":" point_index). Idempotent for an equal re-insert;
  // returns false (and leaves the ring untouched) on a conflicting weight.
  bool insert(const RingMember& member);

  // Removes every point of the member. Returns false when absent (no-op).
  bool remove(const std::string& member_id);

  bool contains(const std::string& member_id) const {
    return members_.count(member_id) > 0;
  }
  size_t member_count() const { return members_.size(); }
  size_t point_count() const { return points_.size(); }
  bool empty() const { return members_.empty(); }
  const std::map<std::string, uint32_t>& members() const { return members_; }
  const std::map<uint64_t, std::string>& points() const { return points_; }

  // Clockwise walk from hash(key), collecting the first occurrence of each
  // distinct member. Returns min(n_distinct, member_count()) ids.
  // Throws std::runtime_error on an empty ring.
  std::vector<std::string> lookup(std::string_view key,
                                  size_t n_distinct) const;

  bool operator==(const HashRing& other) const {
    return points_ == other.points_ && members_ == other.members_;
  }

  // Metadata value form: newline-separated "member_id,weight" records.
  std::string to_text() const;
  static std::optional<HashRing> from_text(std::string_view text,
                                           HashFn hash = ring_hash64);

 private:
  HashFn hash_;
  std::map<uint64_t, std::string> points_;
  std::map<std::string, uint32_t> members_;
};

// One global ring (nodes) and one local ring (worker indices, shared by all
// nodes of the tier) per tier.
struct RingSet {
  PerTier<HashRing> global;
  PerTier<HashRing> local;

  bool operator==(const RingSet&) const = default;
};

// Builds the local rings for a tier layout of workers_per_node[i] workers,
// member ids "0".."w-1".
PerTier<HashRing> make_local_rings(const PerTier<uint32_t>& workers_per_node,
                                   HashFn hash = ring_hash64);

// The placement rule: for each tier i, take ring_lookup(global_i, key, R_i)
// nodes, and on each of them the ring_lookup(local_i, key, T_i) workers.
// Throws std::runtime_error if a tier has R_i > 0 but an empty global ring.
PerTier<std::vector<WorkerAddress>> responsible_workers(
    std::string_view key, const ReplicationVector& rv, const RingSet& rings);

// Flattened union over tiers, memory tier first.
std::vector<WorkerAddress> all_responsible_workers(std::string_view key,
                                                   const ReplicationVector& rv,
                                                   const RingSet& rings);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_RING_HPP_
