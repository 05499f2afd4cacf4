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

#include "annakv/routing.hpp"

#include "annakv/client.hpp"
#include "doctest.h"
#include "test_cluster.hpp"

namespace annakv {
namespace {

RoutingNode* add_router(TestCluster& tc, const NodeId& id,
                        bool cold = false) {
  RoutingNodeConfig cfg;
  cfg.id = id;
  cfg.seed_workers = {{tc.nodes.front()->id(), 0}};
  cfg.read_retry_ms = 500;
  cfg.k = tc.view0->k;
  MetaViewPtr view = tc.nodes.front()->view();
  return tc.world.spawn<RoutingNode>(cfg, view, tc.world.net(), cold);
}

Client* add_client(TestCluster& tc, const std::string& id,
                   const NodeId& router) {
  ClientConfig cfg;
  cfg.id = id;
  cfg.routers = {{router, Address::kControlPlane}};
  cfg.backoff_start_ms = tc.gossip_ms;
  return tc.world.spawn<Client>(cfg, tc.world.net());
}

Client::Result run_op(TestCluster& tc, Client* client, bool get,
                      const std::string& key, const std::string& value = "") {
  if (get)
    client->start_get(key);
  else
    client->start_put(key, value);
  tc.world.run_until([&] { return !client->busy(); }, 30000);
  auto results = client->take_results();
  REQUIRE_EQ(results.size(), 1);
  return results.front();
}

std::optional<ResponseMsg> raw_resolve(RawEndpoint& ep, const Address& router,
                                       const std::string& key,
                                       bool refresh = false) {
  RequestMsg req;
  req.op = RequestMsg::Op::kResolve;
  req.key = key;
  req.force_refresh = refresh;
  return ep.request(router, std::move(req));
}

TEST_CASE("resolve prefers memory endpoints and falls back to disk") {
  TestCluster tc(2, 3, 2);
  RoutingNode* router = add_router(tc, "r0");
  RawEndpoint ep(tc.world, "tester");
  tc.world.run_for(50);

  SUBCASE("key with memory and disk replicas yields memory only") {
    auto resp = raw_resolve(ep, {"r0", Address::kControlPlane}, "somekey");
    REQUIRE(resp.has_value());
    REQUIRE(resp->status == ResponseMsg::Status::kOk);
    REQUIRE_FALSE(resp->addresses.empty());
    for (const auto& a : resp->addresses) CHECK_EQ(a.node_id[0], 'm');
  }

  SUBCASE("key demoted to disk yields disk endpoints") {
    ReplicationVector rv;
    rv.node_replicas = {0, 3};
    rv.worker_replicas = {1, 1};
    BroadcastMsg change;
    change.event = BroadcastMsg::Event::kRvChanged;
    change.key = "coldkey";
    change.rv = rv;
    tc.world.net().broadcast(change, "");
    tc.world.run_for(50);
    auto resp = raw_resolve(ep, {"r0", Address::kControlPlane}, "coldkey");
    REQUIRE(resp.has_value());
    REQUIRE_EQ(resp->addresses.size(), 3);
    for (const auto& a : resp->addresses) CHECK_EQ(a.node_id[0], 'e');
  }

  SUBCASE("never-written key resolves to the default-vector placement") {
    std::string key = "neverwritten";
    auto resp = raw_resolve(ep, {"r0", Address::kControlPlane}, key);
    REQUIRE(resp.has_value());
    auto placed =
        responsible_workers(key, default_vector(2), router->view()->rings);
    auto& mem = at_tier(placed, Tier::kMem);
    REQUIRE_EQ(resp->addresses.size(), mem.size());
    for (size_t i = 0; i < mem.size(); ++i) {
      CHECK_EQ(resp->addresses[i].node_id, mem[i].node_id);
      CHECK_EQ(resp->addresses[i].worker,
               static_cast<int32_t>(mem[i].worker_index));
    }
  }

  SUBCASE("preference rule holds across random keys and vectors") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
      std::string key = "p" + std::to_string(i);
      if (rng() % 2) {
        ReplicationVector rv;
        rv.node_replicas = {uint32_t(rng() % 3), uint32_t(1 + rng() % 3)};
        if (rv.total_node_replicas() == 0) rv.node_replicas = {1, 2};
        rv.worker_replicas = {1, 1};
        BroadcastMsg change;
        change.event = BroadcastMsg::Event::kRvChanged;
        change.key = key;
        change.rv = rv;
        tc.world.net().broadcast(change, "");
      }
    }
    tc.world.run_for(50);
    for (int i = 0; i < 100; ++i) {
      std::string key = "p" + std::to_string(i);
      auto resp = raw_resolve(ep, {"r0", Address::kControlPlane}, key);
      REQUIRE(resp.has_value());
      bool has_mem = router->view()->rv_of(key).r(Tier::kMem) >= 1;
      for (const auto& a : resp->addresses)
        CHECK_EQ(a.node_id[0], has_mem ? 'm' : 'e');
    }
  }
}

TEST_CASE("client caches addresses: the second get resolves nothing") {
  TestCluster tc(2, 3, 2);
  RoutingNode* router = add_router(tc, "r0");
  Client* client = add_client(tc, "c0", "r0");

  auto put = run_op(tc, client, false, "cachedkey", "v");
  CHECK(put.outcome == Client::Result::Outcome::kOk);
  uint64_t resolves_after_put = router->resolve_count();
  CHECK_GE(resolves_after_put, 1);

  auto get1 = run_op(tc, client, true, "cachedkey");
  CHECK(get1.outcome == Client::Result::Outcome::kOk);
  CHECK_EQ(get1.value, "v");
  CHECK_EQ(router->resolve_count(), resolves_after_put);  // cache hit

  auto get2 = run_op(tc, client, true, "cachedkey");
  CHECK_EQ(get2.value, "v");
  CHECK_EQ(router->resolve_count(), resolves_after_put);
}

TEST_CASE("a moved key costs exactly one re-resolve") {
  TestCluster tc(2, 3, 2);
  RoutingNode* router = add_router(tc, "r0");
  Client* client = add_client(tc, "c0", "r0");
  RawEndpoint admin(tc.world, "admin");

  std::string key = "movedkey";
  auto put = run_op(tc, client, false, key, "v1");
  REQUIRE(put.outcome == Client::Result::Outcome::kOk);
  REQUIRE(tc.settle());

  // Demote the key behind the client's back. The router is kept fresh (it
  // receives the vector change and the storage nodes migrate the data); the
  // client still holds the old memory-tier addresses.
  ReplicationVector rv;
  rv.node_replicas = {0, 3};
  rv.worker_replicas = {1, 1};
  auto view = tc.nodes.front()->view();
  auto rv_key = rv_meta_key(key);
  auto meta_target = worker_address(view->replicas_of(rv_key).front());
  REQUIRE(admin.put(meta_target, rv_key, encode_rv(rv), true));
  BroadcastMsg change;
  change.event = BroadcastMsg::Event::kRvChanged;
  change.key = key;
  change.rv = rv;
  tc.world.net().broadcast(change, "");
  REQUIRE(tc.settle());
  REQUIRE(client->has_cached_address(key));

  uint64_t resolves_before = router->resolve_count();
  auto get = run_op(tc, client, true, key);
  CHECK(get.outcome == Client::Result::Outcome::kOk);
  CHECK_EQ(get.value, "v1");
  CHECK_EQ(router->resolve_count(), resolves_before + 1);
}

TEST_CASE("client reads never go backwards") {
  // Gossip is effectively paused so two replicas stay divergent.
  TestCluster tc(3, 0, 0, InMemoryTransport::Options(), 2, 2, 600000,
                 600000);
  add_router(tc, "r0");
  Client* client = add_client(tc, "c0", "r0");
  RawEndpoint admin(tc.world, "admin");

  std::string key = "racekey";
  ReplicationVector rv;
  rv.node_replicas = {2, 0};
  rv.worker_replicas = {1, 1};
  BroadcastMsg change;
  change.event = BroadcastMsg::Event::kRvChanged;
  change.key = key;
  change.rv = rv;
  tc.world.net().broadcast(change, "");
  tc.world.run_for(50);

  auto view = tc.nodes.front()->view();
  auto replicas = view->replicas_of(key);
  REQUIRE_EQ(replicas.size(), 2);
  // replicas[0] holds the stale write, replicas[1] the fresh one.
  REQUIRE(admin.put(worker_address(replicas[0]), key, "old"));
  REQUIRE(admin.put(worker_address(replicas[1]), key, "new"));

  // Round-robin: this get lands on the fresh replica...
  auto get1 = run_op(tc, client, true, key);
  CHECK_EQ(get1.value, "new");
  // ...and this one on the stale replica; the merged cache must win.
  auto get2 = run_op(tc, client, true, key);
  CHECK_EQ(get2.value, "new");
  CHECK_EQ(client->cached_value(key)->payload, "new");
}

TEST_CASE("routing state is soft: a cold router rebuilds from metadata") {
  TestCluster tc(2, 3, 2);
  RawEndpoint admin(tc.world, "admin");
  auto view = tc.nodes.front()->view();

  // Ring membership lives in the store, as any other value.
  for (Tier t : kAllTiers) {
    auto key = ring_meta_key(t);
    auto target = worker_address(view->replicas_of(key).front());
    auto resp = admin.put(target, key,
                          at_tier(view->rings.global, t).to_text(), true);
    REQUIRE(resp.has_value());
    REQUIRE(resp->status == ResponseMsg::Status::kOk);
  }
  REQUIRE(tc.settle());

  RoutingNode* warm = add_router(tc, "r0");
  Client* c0 = add_client(tc, "c0", "r0");
  auto put = run_op(tc, c0, false, "softkey", "v");
  REQUIRE(put.outcome == Client::Result::Outcome::kOk);
  warm->kill();

  // A replacement starts with nothing cached and must serve correctly.
  RoutingNode* cold = add_router(tc, "r1", /*cold=*/true);
  tc.world.run_until([&] { return cold->ready(); }, 30000);
  REQUIRE(cold->ready());

  Client* c1 = add_client(tc, "c1", "r1");
  auto get = run_op(tc, c1, true, "softkey");
  CHECK(get.outcome == Client::Result::Outcome::kOk);
  CHECK_EQ(get.value, "v");

  RawEndpoint ep(tc.world, "tester2");
  auto resp = raw_resolve(ep, {"r1", Address::kControlPlane}, "softkey");
  REQUIRE(resp.has_value());
  for (const auto& a : resp->addresses) CHECK_EQ(a.node_id[0], 'm');
}

TEST_CASE("retries exhaust into an unavailable error") {
  TestCluster tc(1, 0, 0);
  add_router(tc, "r0");
  Client* client = add_client(tc, "c0", "r0");

  auto ok = run_op(tc, client, false, "k", "v");
  REQUIRE(ok.outcome == Client::Result::Outcome::kOk);

  tc.nodes[0]->kill();
  tc.world.net().deregister_node(tc.nodes[0]->id());

  client->start_get("k");
  tc.world.run_until([&] { return !client->busy(); }, 120000);
  REQUIRE_FALSE(client->busy());
  auto results = client->take_results();
  REQUIRE_EQ(results.size(), 1);
  CHECK(results[0].outcome == Client::Result::Outcome::kUnavailable);
}

TEST_CASE("client rejects the reserved metadata prefix") {
  TestCluster tc(1, 0, 0);
  add_router(tc, "r0");
  Client* client = add_client(tc, "c0", "r0");
  CHECK_THROWS_AS(client->start_put("__anna_meta__/rv/x", "v"),
                  std::invalid_argument);
  CHECK_THROWS_AS(client->start_get("__anna_meta__/ring/mem"),
                  std::invalid_argument);
}

}  // namespace
}  // namespace annakv
