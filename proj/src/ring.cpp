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

#include "annakv/ring.hpp"

#include <charconv>
#include <stdexcept>

namespace annakv {

bool HashRing::insert(const RingMember& member) {
  auto it = members_.find(member.member_id);
  if (it != members_.end()) return it->second == member.weight;
  for (uint32_t i = 0; i < member.weight; ++i) {
    std::string point_key = member.member_id + ":" + std::to_string(i);
    uint64_t pos = hash_(point_key);
    auto [pit, inserted] = points_.emplace(pos, member.member_id);
    if (!inserted)
      throw std::runtime_error("hash ring point collision at " + point_key);
  }
  members_.emplace(member.member_id, member.weight);
  return true;
}

bool HashRing::remove(const std::string& member_id) {
  auto it = members_.find(member_id);
  if (it == members_.end()) return false;
  for (uint32_t i = 0; i < it->second; ++i)
    points_.erase(hash_(member_id + ":" + std::to_string(i)));
  members_.erase(it);
  return true;
}

std::vector<std::string> HashRing::lookup(std::string_view key,
                                          size_t n_distinct) const {
  if (points_.empty()) throw std::runtime_error("lookup on empty hash ring");
  std::vector<std::string> out;
  size_t want = std::min(n_distinct, members_.size());
  out.reserve(want);
  auto it = points_.lower_bound(hash_(key));
  for (size_t walked = 0; out.size() < want && walked < points_.size();
       ++walked) {
    if (it == points_.end()) it = points_.begin();
    const std::string& member = it->second;
    bool seen = false;
    for (const auto& m : out)
      if (m == member) {
        seen = true;
        break;
      }
    if (!seen) out.push_back(member);
    ++it;
  }
  return out;
}

std::string HashRing::to_text() const {
  std::string out;
  for (const auto& [id, weight] : members_) {
    if (!out.empty()) out += '\n';
    out += id;
    out += ',';
    out += std::to_string(weight);
  }
  return out;
}

std::optional<HashRing> HashRing::from_text(std::string_view text,
                                            HashFn hash) {
  HashRing ring(hash);
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) {
      if (start > text.size()) break;
      continue;
    }
    size_t comma = line.rfind(',');
    if (comma == std::string_view::npos) return std::nullopt;
    uint32_t weight = 0;
    std::string_view w = line.substr(comma + 1);
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
    if (ec != std::errc() || ptr != w.data() + w.size() || weight == 0)
      return std::nullopt;
    if (!ring.insert({std::string(line.substr(0, comma)), weight}))
      return std::nullopt;
  }
  return ring;
}

PerTier<HashRing> make_local_rings(const PerTier<uint32_t>& workers_per_node,
                                   HashFn hash) {
  PerTier<HashRing> rings = {HashRing(hash), HashRing(hash)};
  for (Tier t : kAllTiers) {
    for (uint32_t w = 0; w < at_tier(workers_per_node, t); ++w)
      at_tier(rings, t).insert(
          {std::to_string(w), RingMember::kDefaultWorkerWeight});
  }
  return rings;
}

PerTier<std::vector<WorkerAddress>> responsible_workers(
    std::string_view key, const ReplicationVector& rv, const RingSet& rings) {
  PerTier<std::vector<WorkerAddress>> out;
  for (Tier t : kAllTiers) {
    uint32_t r = rv.r(t);
    if (r == 0) continue;
    const HashRing& global = at_tier(rings.global, t);
    if (global.empty())
      throw std::runtime_error(std::string("no live nodes in tier ") +
                               std::string(tier_name(t)));
    std::vector<std::string> nodes = global.lookup(key, r);
    std::vector<std::string> workers =
        at_tier(rings.local, t).lookup(key, rv.t(t));
    auto& placed = at_tier(out, t);
    placed.reserve(nodes.size() * workers.size());
    for (const auto& node : nodes)
      for (const auto& worker : workers)
        placed.push_back(
            {node, static_cast<uint32_t>(std::stoul(worker))});
  }
  return out;
}

std::vector<WorkerAddress> all_responsible_workers(
    std::string_view key, const ReplicationVector& rv, const RingSet& rings) {
  auto per_tier = responsible_workers(key, rv, rings);
  std::vector<WorkerAddress> out;
  for (Tier t : kAllTiers) {
    auto& placed = at_tier(per_tier, t);
    out.insert(out.end(), placed.begin(), placed.end());
  }
  return out;
}

}  // namespace annakv
