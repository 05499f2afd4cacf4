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

#ifndef INCLUDE_ANNAKV_TIERS_HPP_
#define INCLUDE_ANNAKV_TIERS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace annakv {

// Tiers are ordered fastest-first. The two-tier build uses a memory tier
// and a disk (EBS-style) tier; PerTier keeps per-tier state extensible.
enum class Tier : uint8_t { kMem = 0, kEbs = 1 };

inline constexpr size_t kTierCount = 2;
inline constexpr std::array<Tier, kTierCount> kAllTiers = {Tier::kMem,
                                                           Tier::kEbs};

template <typename T>
using PerTier = std::array<T, kTierCount>;

template <typename T>
inline T& at_tier(PerTier<T>& a, Tier t) {
  return a[static_cast<size_t>(t)];
}
template <typename T>
inline const T& at_tier(const PerTier<T>& a, Tier t) {
  return a[static_cast<size_t>(t)];
}

inline std::string_view tier_name(Tier t) {
  return t == Tier::kMem ? "mem" : "ebs";
}

inline std::optional<Tier> tier_from_name(std::string_view s) {
  if (s == "mem") return Tier::kMem;
  if (s == "ebs") return Tier::kEbs;
  return std::nullopt;
}

using NodeId = std::string;

// A specific worker thread: the unit of data placement.
struct WorkerAddress {
  NodeId node_id;
  uint32_t worker_index = 0;

  auto operator<=>(const WorkerAddress&) const = default;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_TIERS_HPP_
