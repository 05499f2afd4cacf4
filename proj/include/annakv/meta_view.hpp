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

#ifndef INCLUDE_ANNAKV_META_VIEW_HPP_
#define INCLUDE_ANNAKV_META_VIEW_HPP_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "annakv/messages.hpp"
#include "annakv/metadata.hpp"
#include "annakv/ring.hpp"

namespace annakv {

// A node's snapshot of cluster metadata: rings plus the replication vectors
// it has learned. Eventually consistent; stale views cause redirects, never
// corruption. Immutable once built — updates produce a new version.
struct MetaView {
  uint64_t version = 0;
  uint32_t k = 2;
  RingSet rings;
  std::map<std::string, ReplicationVector> rv_overrides;

  ReplicationVector rv_of(const std::string& key) const {
    if (is_meta_key(key)) return metadata_vector();
    auto it = rv_overrides.find(key);
    if (it != rv_overrides.end()) return it->second;
    return default_vector(k);
  }

  // Throws when a tier with replicas demanded has no live nodes.
  std::vector<WorkerAddress> replicas_of(const std::string& key) const {
    return all_responsible_workers(key, rv_of(key), rings);
  }

  bool is_replica(const std::string& key, const WorkerAddress& self) const {
    for (const auto& w : replicas_of(key))
      if (w == self) return true;
    return false;
  }

  // The address set handed to clients: memory-tier endpoints whenever the
  // key has memory replicas on live nodes, disk endpoints otherwise.
  std::vector<Address> preferred_addresses(const std::string& key) const {
    ReplicationVector rv = rv_of(key);
    for (Tier t : kAllTiers) {
      if (rv.r(t) == 0 || at_tier(rings.global, t).empty()) continue;
      ReplicationVector only = rv;
      at_tier(only.node_replicas, t == Tier::kMem ? Tier::kEbs : Tier::kMem) =
          0;
      auto placed = responsible_workers(key, only, rings);
      std::vector<Address> out;
      for (const auto& w : at_tier(placed, t))
        out.push_back(worker_address(w));
      if (!out.empty()) return out;
    }
    return {};
  }
};

using MetaViewPtr = std::shared_ptr<const MetaView>;

inline MetaViewPtr make_view(MetaView view) {
  return std::make_shared<const MetaView>(std::move(view));
}

// Copy-on-write helpers; each returns a new snapshot with a bumped version.
MetaViewPtr with_member(const MetaViewPtr& view, Tier tier,
                        const RingMember& member);
MetaViewPtr without_member(const MetaViewPtr& view, Tier tier,
                           const NodeId& node);
MetaViewPtr with_rv(const MetaViewPtr& view, const std::string& key,
                    const ReplicationVector& rv);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_META_VIEW_HPP_
