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

#include "annakv/cluster.hpp"

#include "doctest.h"

namespace annakv {
namespace {

ClusterShape shape_of(uint32_t mem, uint32_t ebs, uint32_t pending_mem = 0) {
  ClusterShape s;
  for (uint32_t i = 0; i < mem; ++i)
    at_tier(s.live, Tier::kMem).push_back("m" + std::to_string(i));
  for (uint32_t i = 0; i < ebs; ++i)
    at_tier(s.live, Tier::kEbs).push_back("e" + std::to_string(i));
  at_tier(s.pending, Tier::kMem) = pending_mem;
  return s;
}

TEST_CASE("hourly cost adds up over the configured prices") {
  CostModel model;  // 0.532 / 0.133 / 0.30
  CHECK_EQ(hourly_cost(shape_of(1, 4), model), doctest::Approx(1.364));

  SUBCASE("doubling memory nodes adds exactly that many node prices") {
    double base = hourly_cost(shape_of(3, 4), model);
    double doubled = hourly_cost(shape_of(6, 4), model);
    CHECK_EQ(doubled - base, doctest::Approx(3 * 0.532));
  }

  SUBCASE("default prices keep the 4x tier ratio") {
    CHECK_EQ(at_tier(model.node_price, Tier::kMem) /
                 at_tier(model.node_price, Tier::kEbs),
             doctest::Approx(4.0));
  }

  SUBCASE("pending nodes are billed") {
    CHECK_EQ(hourly_cost(shape_of(1, 4, 2), model),
             doctest::Approx(1.364 + 2 * 0.532));
  }

  SUBCASE("an empty shape is an error") {
    CHECK_THROWS_AS(hourly_cost(ClusterShape{}, model),
                    std::invalid_argument);
  }

  SUBCASE("cost is monotone in every count") {
    for (uint32_t mem = 1; mem < 5; ++mem)
      for (uint32_t ebs = 3; ebs < 7; ++ebs) {
        double here = hourly_cost(shape_of(mem, ebs), model);
        CHECK_LT(here, hourly_cost(shape_of(mem + 1, ebs), model));
        CHECK_LT(here, hourly_cost(shape_of(mem, ebs + 1), model));
      }
  }
}

TEST_CASE("ledger spawns after the delay and dedupes in-flight plans") {
  TopologyLedger ledger({1, 3}, 5000);
  ledger.bootstrap(Tier::kMem, "m0");
  for (int i = 0; i < 3; ++i)
    ledger.bootstrap(Tier::kEbs, "e" + std::to_string(i));

  ActionPlan plan;
  at_tier(plan.add_nodes, Tier::kMem) = 2;
  ledger.apply_plan(plan, 0);
  CHECK_EQ(ledger.shape().billed_count(Tier::kMem), 3);
  CHECK(ledger.due_spawns(4999).empty());

  // The same request while pending changes nothing.
  ledger.apply_plan(plan, 1000);
  CHECK_EQ(ledger.shape().billed_count(Tier::kMem), 3);

  auto due = ledger.due_spawns(5000);
  CHECK_EQ(due.size(), 2);
  for (const auto& id : due) ledger.mark_live(id);
  CHECK_EQ(ledger.shape().live_count(Tier::kMem), 3);
}

TEST_CASE("removals at the tier floor are dropped") {
  TopologyLedger ledger({1, 3}, 1000);
  ledger.bootstrap(Tier::kMem, "m0");
  for (int i = 0; i < 3; ++i)
    ledger.bootstrap(Tier::kEbs, "e" + std::to_string(i));

  ActionPlan plan;
  plan.remove_nodes = {"e0"};  // would leave k (=2) disk nodes
  auto applied = ledger.apply_plan(plan, 0);
  CHECK(applied.departures.empty());
  REQUIRE_EQ(applied.dropped.size(), 1);
  CHECK_EQ(ledger.shape().live_count(Tier::kEbs), 3);

  ActionPlan plan2;
  plan2.remove_nodes = {"m0"};
  auto applied2 = ledger.apply_plan(plan2, 0);
  CHECK(applied2.departures.empty());
  CHECK_EQ(ledger.shape().live_count(Tier::kMem), 1);
}

TEST_CASE("failure marks the handle and shape excludes it") {
  TopologyLedger ledger({1, 3}, 1000);
  ledger.bootstrap(Tier::kEbs, "e0");
  ledger.bootstrap(Tier::kEbs, "e1");
  ledger.bootstrap(Tier::kEbs, "e2");
  ledger.bootstrap(Tier::kMem, "m0");
  CHECK(ledger.fail("e1"));
  CHECK_FALSE(ledger.fail("e1"));  // already failed
  CHECK_EQ(ledger.shape().live_count(Tier::kEbs), 2);
  CHECK(ledger.degraded());
  NodeId replacement = ledger.spawn_replacement(Tier::kEbs, 100);
  CHECK(ledger.due_spawns(1100).size() == 1);
  ledger.mark_live(replacement);
  CHECK_FALSE(ledger.degraded());
}

}  // namespace
}  // namespace annakv
