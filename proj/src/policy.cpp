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

#include "annakv/policy.hpp"

#include <algorithm>
#include <cmath>

#include "annakv/bytes.hpp"

namespace annakv {

namespace {

uint32_t ceil_u32(double v) {
  double c = std::ceil(v - 1e-9);
  return c <= 0 ? 0 : static_cast<uint32_t>(c);
}

double capped_ratio(double avg_latency, const PolicyConfig& cfg) {
  if (cfg.slo.mode == SloSpec::Mode::kBudget)
    return cfg.knobs.latency_ratio_cap;  // maximize within budget
  if (cfg.slo.latency_objective_ms <= 0) return 1.0;
  return std::min(avg_latency / cfg.slo.latency_objective_ms,
                  cfg.knobs.latency_ratio_cap);
}

// Mean storage tier occupancy if `delta_bytes` lands on the tier.
double projected_storage(const ClusterSnapshot& snap, const Summary& summary,
                         Tier tier, int64_t delta_bytes) {
  double nodes = double(at_tier(snap.membership, tier).size());
  if (nodes == 0) return 1.0;
  double capacity = nodes * double(at_tier(snap.node_capacity_bytes, tier));
  if (capacity <= 0) return 1.0;
  double used = at_tier(summary.avg_storage, tier) * capacity;
  return (used + double(delta_bytes)) / capacity;
}

}  // namespace

ReplicationVector promoted_vector(const ReplicationVector& current,
                                  uint32_t k) {
  ReplicationVector rv = current;
  at_tier(rv.node_replicas, Tier::kMem) += 1;
  uint32_t& ebs = at_tier(rv.node_replicas, Tier::kEbs);
  if (ebs > 0 && rv.total_node_replicas() > k + 1) ebs -= 1;
  rv.worker_replicas = {1, 1};
  return rv;
}

ReplicationVector demoted_vector(uint32_t k) {
  ReplicationVector rv;
  rv.node_replicas = {0, k + 1};
  rv.worker_replicas = {1, 1};
  return rv;
}

MovementDecision movement_policy(const ClusterSnapshot& snap,
                                 const Summary& summary,
                                 const PolicyConfig& cfg,
                                 const PolicyState& state, bool allow_demote,
                                 bool growth_allowed) {
  MovementDecision out;
  uint32_t k = cfg.slo.fault_tolerance;
  const Knobs& knobs = cfg.knobs;

  // Demotions first: idle memory-resident keys go cold, freeing room.
  std::set<std::string> demoted;
  if (allow_demote) {
    for (const auto& [key, rv] : snap.rv_entries) {
      if (is_meta_key(key)) continue;
      if (rv.r(Tier::kMem) == 0) continue;
      double freq = 0;
      auto it = snap.key_counts.find(key);
      if (it != snap.key_counts.end()) freq = it->second;
      if (freq < knobs.demotion_threshold) {
        out.demotions.push_back(key);
        demoted.insert(key);
      }
    }
    for (const auto& [key, freq] : snap.key_counts) {
      if (is_meta_key(key) || demoted.count(key)) continue;
      if (freq >= knobs.demotion_threshold) continue;
      ReplicationVector rv = snap.rv_of(key, k);
      if (rv.r(Tier::kMem) == 0) continue;
      out.demotions.push_back(key);
      demoted.insert(key);
    }
  }

  // Promotions: busy keys stranded on the disk tier get one memory replica.
  // Capacity accounting is a plan-time estimate; the store enforces truth.
  int64_t mem_delta = -int64_t(demoted.size()) * snap.bytes_per_key;
  uint64_t mem_nodes = at_tier(snap.membership, Tier::kMem).size();
  double upper = at_tier(knobs.storage_upper, Tier::kMem);

  // Promote hotter keys first so a full tier keeps its most valuable keys.
  std::vector<std::pair<double, std::string>> candidates;
  for (const auto& [key, freq] : snap.key_counts) {
    if (is_meta_key(key) || freq <= knobs.promotion_threshold) continue;
    if (snap.rv_of(key, k).r(Tier::kMem) != 0) continue;  // already in memory
    candidates.push_back({-freq, key});
  }
  std::sort(candidates.begin(), candidates.end());

  // Eviction pool: coldest first by last access, memory-resident keys only.
  std::vector<std::pair<uint64_t, std::string>> lru;
  bool lru_built = false;
  size_t lru_next = 0;

  for (const auto& [neg_freq, key] : candidates) {
    if (mem_nodes == 0) break;
    if (projected_storage(snap, summary, Tier::kMem,
                          mem_delta + int64_t(snap.bytes_per_key)) <= upper) {
      out.promotions.push_back(key);
      mem_delta += snap.bytes_per_key;
      continue;
    }
    if (growth_allowed) continue;  // new nodes are coming; promote next tick

    // Tier is full and cannot grow: make room by least-recently-used.
    if (!lru_built) {
      lru_built = true;
      for (const auto& [cand, rv] : snap.rv_entries) {
        if (is_meta_key(cand) || rv.r(Tier::kMem) == 0) continue;
        if (demoted.count(cand)) continue;
        double freq = 0;
        auto it = snap.key_counts.find(cand);
        if (it != snap.key_counts.end()) freq = it->second;
        if (freq > knobs.promotion_threshold) continue;  // keep busy keys
        auto la = state.last_access_epoch.find(cand);
        uint64_t epoch = la == state.last_access_epoch.end() ? 0 : la->second;
        lru.push_back({epoch, cand});
      }
      std::sort(lru.begin(), lru.end());
    }
    if (lru_next >= lru.size()) continue;  // nothing evictable
    const std::string& victim = lru[lru_next++].second;
    out.demotions.push_back(victim);
    demoted.insert(victim);
    mem_delta -= snap.bytes_per_key;
    out.promotions.push_back(key);
    mem_delta += snap.bytes_per_key;
  }
  return out;
}

std::vector<std::pair<std::string, ReplicationVector>> replication_policy(
    const ClusterSnapshot& snap, const Summary& summary,
    const PolicyConfig& cfg, const PolicyState& state,
    const std::set<std::string>& exclude, bool allow_grow) {
  (void)state;
  std::vector<std::pair<std::string, ReplicationVector>> out;
  uint32_t k = cfg.slo.fault_tolerance;
  uint32_t mem_nodes =
      static_cast<uint32_t>(at_tier(snap.membership, Tier::kMem).size());
  uint32_t mem_workers = at_tier(snap.workers_per_node, Tier::kMem);
  double ratio = capped_ratio(summary.avg_latency_ms, cfg);

  for (const auto& [key, freq] : snap.key_counts) {
    if (is_meta_key(key) || exclude.count(key)) continue;
    ReplicationVector rv = snap.rv_of(key, k);

    if (allow_grow && freq > summary.hot_threshold && rv.r(Tier::kMem) >= 1 &&
        mem_nodes >= 1) {
      uint32_t r_m = rv.r(Tier::kMem);
      // Across nodes first; across worker threads once every node has one.
      uint32_t r_ideal = ceil_u32(double(r_m) * ratio);
      uint32_t r_new = std::min(r_ideal, mem_nodes);
      if (r_new > r_m) {
        ReplicationVector next = rv;
        at_tier(next.node_replicas, Tier::kMem) = r_new;
        out.push_back({key, next});
      } else if (r_m >= mem_nodes) {
        uint32_t t_m = rv.t(Tier::kMem);
        uint32_t t_new = std::min(ceil_u32(double(t_m) * ratio), mem_workers);
        if (t_new > t_m) {
          ReplicationVector next = rv;
          at_tier(next.worker_replicas, Tier::kMem) = t_new;
          out.push_back({key, next});
        }
      }
      continue;
    }

    // Previously-hot keys that cooled off go back to the default vector.
    if (freq < summary.cold_threshold && rv.r(Tier::kMem) >= 1 &&
        (rv.r(Tier::kMem) > 1 || rv.t(Tier::kMem) > 1 ||
         rv.t(Tier::kEbs) > 1)) {
      out.push_back({key, default_vector(k)});
    }
  }
  return out;
}

ActionPlan policy_tick(const ClusterSnapshot& snap, const PolicyConfig& cfg,
                       PolicyState& state) {
  ActionPlan plan;
  if (int64_t(snap.epoch) <= state.last_acted_epoch) return plan;  // stale
  state.last_acted_epoch = int64_t(snap.epoch);

  // Recency bookkeeping for the eviction policy.
  for (const auto& [key, count] : snap.key_counts)
    if (count > 0) state.last_access_epoch[key] = snap.epoch;
  state.rv_view = snap.rv_entries;

  // Any membership change opens a grace period; demotion, hot-key
  // replication, and elasticity all wait it out.
  if (!state.membership_seen) {
    state.membership_seen = true;
    state.last_membership = snap.membership;
  } else if (state.last_membership != snap.membership) {
    state.last_membership = snap.membership;
    state.grace_until_s = snap.time_s + cfg.grace_period_s;
  }
  bool in_grace = snap.time_s < state.grace_until_s;

  Summary summary = summarize(snap, cfg.knobs);
  const Knobs& knobs = cfg.knobs;
  uint32_t k = cfg.slo.fault_tolerance;
  uint32_t mem_live =
      static_cast<uint32_t>(at_tier(snap.membership, Tier::kMem).size());
  uint32_t ebs_live =
      static_cast<uint32_t>(at_tier(snap.membership, Tier::kEbs).size());

  double budget_cap = cfg.slo.budget_per_hour;
  double mem_price = at_tier(cfg.cost.node_price, Tier::kMem);
  double ebs_price = at_tier(cfg.cost.node_price, Tier::kEbs);
  auto budget_max_mem = [&](uint32_t ebs_total) {
    double spare = budget_cap - cfg.cost.overhead_price -
                   double(ebs_total) * ebs_price;
    return spare < mem_price ? 1u : uint32_t(spare / mem_price);
  };

  bool elasticity = cfg.elasticity_enabled && !in_grace;

  // (1) Storage-threshold elasticity.
  if (elasticity) {
    for (Tier t : kAllTiers) {
      double avg = at_tier(summary.avg_storage, t);
      double upper = at_tier(knobs.storage_upper, t);
      if (avg <= upper) continue;
      uint32_t live = t == Tier::kMem ? mem_live : ebs_live;
      uint32_t pending = at_tier(snap.pending_adds, t);
      double capacity = double(at_tier(snap.node_capacity_bytes, t));
      double used = avg * double(live) * capacity;
      uint32_t target = ceil_u32(used / (upper * capacity));
      if (target > live + pending) {
        uint32_t want = target - live - pending;
        if (cfg.slo.mode == SloSpec::Mode::kBudget) {
          // Truncate to the budget cap.
          double headroom = budget_cap - cfg.cost.overhead_price -
                            double(mem_live) * mem_price -
                            double(ebs_live) * ebs_price -
                            double(at_tier(snap.pending_adds, Tier::kMem)) *
                                mem_price -
                            double(at_tier(snap.pending_adds, Tier::kEbs)) *
                                ebs_price;
          double price = at_tier(cfg.cost.node_price, t);
          uint32_t affordable =
              headroom < price ? 0 : uint32_t(headroom / price);
          if (want > affordable) {
            plan.warnings.push_back("storage add truncated to budget");
            want = affordable;
          }
        }
        at_tier(plan.add_nodes, t) += want;
      }
    }
  }

  // Budget mode spends its allowance on memory nodes up front.
  if (cfg.slo.mode == SloSpec::Mode::kBudget) {
    uint32_t pending = at_tier(snap.pending_adds, Tier::kMem);
    uint32_t max_mem = budget_max_mem(ebs_live);
    uint32_t have = mem_live + pending + at_tier(plan.add_nodes, Tier::kMem);
    if (elasticity && have < max_mem) {
      uint32_t want = max_mem - have;
      uint32_t cap = ceil_u32((knobs.latency_ratio_cap - 1.0) *
                              std::max(mem_live, 1u)) +
                     1;
      at_tier(plan.add_nodes, Tier::kMem) += std::min(want, cap);
    } else if (elasticity && mem_live + pending > max_mem && mem_live > 1) {
      // Over budget (cap lowered): shed memory nodes, cheapest effect first.
      uint32_t excess = mem_live + pending - max_mem;
      excess = std::min(excess, mem_live - 1);
      std::vector<std::pair<double, NodeId>> by_occupancy;
      for (const auto& stats : snap.node_stats)
        if (stats.tier == Tier::kMem)
          by_occupancy.push_back({stats.occupancy, stats.node_id});
      std::sort(by_occupancy.begin(), by_occupancy.end());
      for (uint32_t i = 0; i < excess && i < by_occupancy.size(); ++i)
        plan.remove_nodes.push_back(by_occupancy[i].second);
    }
  }

  // (2) Cross-tier movement. Promotion runs even inside grace; demotion and
  // eviction wait.
  std::set<std::string> touched;
  if (cfg.movement_enabled) {
    bool growth_allowed = elasticity;
    if (cfg.slo.mode == SloSpec::Mode::kBudget) {
      uint32_t max_mem = budget_max_mem(ebs_live);
      growth_allowed = elasticity &&
                       mem_live + at_tier(snap.pending_adds, Tier::kMem) <
                           max_mem;
    }
    MovementDecision moves = movement_policy(snap, summary, cfg, state,
                                             /*allow_demote=*/!in_grace,
                                             growth_allowed);
    plan.promotions = std::move(moves.promotions);
    plan.demotions = std::move(moves.demotions);
    touched.insert(plan.promotions.begin(), plan.promotions.end());
    touched.insert(plan.demotions.begin(), plan.demotions.end());
  }

  // (3) Latency gate: the saturation-cause split. All memory nodes busy
  // means replication would only add gossip load, so nodes are added; any
  // idle node means hot keys should spread onto it instead.
  bool replication_ran = false;
  double objective = cfg.slo.latency_objective_ms;
  bool latency_high = cfg.slo.mode == SloSpec::Mode::kLatency &&
                      summary.avg_latency_ms > knobs.latency_upper * objective;
  if (cfg.slo.mode == SloSpec::Mode::kBudget)
    latency_high = summary.mem_occupancy > knobs.occupancy_upper;
  if (latency_high) {
    uint32_t mem_stat_nodes = 0, saturated = 0;
    for (const auto& stats : snap.node_stats) {
      if (stats.tier != Tier::kMem) continue;
      ++mem_stat_nodes;
      if (stats.occupancy > knobs.occupancy_upper) ++saturated;
    }
    bool all_saturated = mem_stat_nodes > 0 && saturated == mem_stat_nodes;
    if (all_saturated && summary.mem_occupancy > knobs.occupancy_upper) {
      if (elasticity && cfg.slo.mode == SloSpec::Mode::kLatency) {
        double ratio = capped_ratio(summary.avg_latency_ms, cfg);
        uint32_t add = ceil_u32((ratio - 1.0) * double(mem_live));
        uint32_t pending = at_tier(snap.pending_adds, Tier::kMem);
        if (add > pending)
          at_tier(plan.add_nodes, Tier::kMem) += add - pending;
      }
    } else if (cfg.replication_enabled && !in_grace) {
      replication_ran = true;
      auto updates = replication_policy(snap, summary, cfg, state, touched,
                                        /*allow_grow=*/true);
      for (auto& u : updates) {
        touched.insert(u.first);
        plan.rv_updates.push_back(std::move(u));
      }
    }
  }
  if (!replication_ran && cfg.replication_enabled && !in_grace) {
    // Cooled keys are restored regardless of the latency gate.
    auto updates = replication_policy(snap, summary, cfg, state, touched,
                                      /*allow_grow=*/false);
    for (auto& u : updates) {
      touched.insert(u.first);
      plan.rv_updates.push_back(std::move(u));
    }
  }

  // (4) Removal, only when both latency and occupancy sit under the floors.
  if (elasticity && cfg.slo.mode == SloSpec::Mode::kLatency &&
      summary.avg_latency_ms < knobs.latency_lower * objective &&
      summary.mem_occupancy < knobs.occupancy_lower &&
      at_tier(plan.add_nodes, Tier::kMem) == 0 &&
      at_tier(snap.pending_adds, Tier::kMem) == 0) {
    auto pick_victim = [&](Tier t) -> std::optional<NodeId> {
      std::optional<std::pair<double, NodeId>> best;
      for (const auto& stats : snap.node_stats) {
        if (stats.tier != t) continue;
        std::pair<double, NodeId> cand{stats.occupancy, stats.node_id};
        if (!best || cand < *best) best = cand;
      }
      if (!best) return std::nullopt;
      return best->second;
    };
    if (mem_live > 1) {
      auto victim = pick_victim(Tier::kMem);
      if (victim) plan.remove_nodes.push_back(*victim);
    }
    // The disk tier shrinks only when its data comfortably fits on fewer
    // nodes; the k+1 floor always holds.
    if (ebs_live > k + 1 &&
        at_tier(summary.avg_storage, Tier::kEbs) <
            at_tier(knobs.storage_lower, Tier::kEbs) &&
        at_tier(summary.avg_storage, Tier::kEbs) * double(ebs_live) /
                double(ebs_live - 1) <
            at_tier(knobs.storage_upper, Tier::kEbs)) {
      auto victim = pick_victim(Tier::kEbs);
      if (victim) plan.remove_nodes.push_back(*victim);
    }
  }

  // Clamp vectors that would exceed the post-removal node counts.
  if (!plan.remove_nodes.empty()) {
    PerTier<uint32_t> post = {mem_live, ebs_live};
    for (const auto& victim : plan.remove_nodes) {
      for (Tier t : kAllTiers) {
        const auto& members = at_tier(snap.membership, t);
        if (std::find(members.begin(), members.end(), victim) !=
            members.end())
          at_tier(post, t) -= 1;
      }
    }
    for (const auto& [key, rv] : snap.rv_entries) {
      if (is_meta_key(key) || touched.count(key)) continue;
      ReplicationVector clamped = rv;
      bool changed = false;
      for (Tier t : kAllTiers) {
        if (clamped.r(t) > at_tier(post, t)) {
          at_tier(clamped.node_replicas, t) = at_tier(post, t);
          changed = true;
        }
      }
      if (!changed) continue;
      // Keep the fault floor by backfilling the other tier.
      for (Tier t : kAllTiers) {
        Tier other = t == Tier::kMem ? Tier::kEbs : Tier::kMem;
        while (clamped.total_node_replicas() < k + 1 &&
               clamped.r(other) < at_tier(post, other))
          at_tier(clamped.node_replicas, other) += 1;
      }
      if (satisfies_fault_floor(clamped, k)) {
        plan.rv_updates.push_back({key, clamped});
        touched.insert(key);
      } else {
        plan.warnings.push_back("removal blocked by vector floor for " + key);
        plan.remove_nodes.clear();
        break;
      }
    }
  }

  return plan;
}

// ---------------------------------------------------------------------------
// Plan codec for the monitor -> manager channel.

std::string encode_plan(const ActionPlan& plan) {
  std::string out;
  auto put_list = [&](const std::vector<std::string>& list) {
    put_u32(out, static_cast<uint32_t>(list.size()));
    for (const auto& s : list) put_str16(out, s);
  };
  put_list(plan.promotions);
  put_list(plan.demotions);
  put_u32(out, static_cast<uint32_t>(plan.rv_updates.size()));
  for (const auto& [key, rv] : plan.rv_updates) {
    put_str16(out, key);
    put_str16(out, encode_rv(rv));
  }
  for (Tier t : kAllTiers) put_u32(out, at_tier(plan.add_nodes, t));
  put_list(plan.remove_nodes);
  put_list(plan.warnings);
  return out;
}

std::optional<ActionPlan> decode_plan(std::string_view bytes) {
  ByteReader r(bytes);
  ActionPlan plan;
  auto get_list = [&](std::vector<std::string>& list) {
    auto n = r.u32();
    if (!n) return false;
    for (uint32_t i = 0; i < *n; ++i) {
      auto s = get_str16(r);
      if (!s) return false;
      list.push_back(std::move(*s));
    }
    return true;
  };
  if (!get_list(plan.promotions) || !get_list(plan.demotions))
    return std::nullopt;
  auto n = r.u32();
  if (!n) return std::nullopt;
  for (uint32_t i = 0; i < *n; ++i) {
    auto key = get_str16(r);
    auto rv_text = get_str16(r);
    if (!key || !rv_text) return std::nullopt;
    auto rv = decode_rv(*rv_text);
    if (!rv) return std::nullopt;
    plan.rv_updates.push_back({std::move(*key), *rv});
  }
  for (Tier t : kAllTiers) {
    auto count = r.u32();
    if (!count) return std::nullopt;
    at_tier(plan.add_nodes, t) = *count;
  }
  if (!get_list(plan.remove_nodes) || !get_list(plan.warnings) || !r.done())
    return std::nullopt;
  return plan;
}

}  // namespace annakv
