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

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "test_cluster.hpp"

namespace annakv {
namespace {

// Test-side winner pick, independent of the production merge.
LwwCell oracle_merge(const std::vector<LwwCell>& cells) {
  const LwwCell* best = &cells.front();
  for (const auto& c : cells)
    if (std::tie(c.ts.clock_ms, c.ts.node_seq, c.ts.op_seq) >
        std::tie(best->ts.clock_ms, best->ts.node_seq, best->ts.op_seq))
      best = &c;
  return *best;
}

// Finds keys whose first memory owner is the wanted node.
std::vector<std::string> keys_owned_by(const MetaView& view,
                                       const NodeId& node, size_t count,
                                       const std::string& prefix = "k") {
  std::vector<std::string> out;
  for (int i = 0; out.size() < count && i < 100000; ++i) {
    std::string key = prefix + std::to_string(i);
    if (view.replicas_of(key).front().node_id == node) out.push_back(key);
  }
  return out;
}

TEST_CASE("put then get on the same worker reads the write") {
  TestCluster tc(2, 0, 0);
  RawEndpoint client(tc.world, "tester");
  auto view = tc.nodes[0]->view();
  std::string key = keys_owned_by(*view, "m0", 1)[0];
  Address owner = worker_address(view->replicas_of(key).front());

  auto put = client.put(owner, key, "v");
  REQUIRE(put.has_value());
  CHECK(put->status == ResponseMsg::Status::kOk);
  auto get = client.get(owner, key);
  REQUIRE(get.has_value());
  CHECK(get->status == ResponseMsg::Status::kOk);
  CHECK_EQ(get->cell->payload, "v");
}

TEST_CASE("get of an absent key is KEY_MISSING") {
  TestCluster tc(1, 0, 0);
  RawEndpoint client(tc.world, "tester");
  auto view = tc.nodes[0]->view();
  std::string key = keys_owned_by(*view, "m0", 1)[0];
  auto get = client.get(worker_address(view->replicas_of(key).front()), key);
  REQUIRE(get.has_value());
  CHECK(get->status == ResponseMsg::Status::kKeyMissing);
}

TEST_CASE("reserved prefix is rejected for external clients only") {
  TestCluster tc(3, 0, 0);
  RawEndpoint client(tc.world, "tester");
  auto view = tc.nodes[0]->view();
  std::string key = meta_key(MetaKind::kRv, {"foo"});
  Address owner = worker_address(view->replicas_of(key).front());

  auto denied = client.put(owner, key, "M:1,1;E:2,1");
  REQUIRE(denied.has_value());
  CHECK(denied->status == ResponseMsg::Status::kError);

  auto allowed = client.put(owner, key, "M:1,1;E:2,1", /*internal=*/true);
  REQUIRE(allowed.has_value());
  CHECK(allowed->status == ResponseMsg::Status::kOk);
}

TEST_CASE("request for a key owned elsewhere redirects to the owner set") {
  TestCluster tc(3, 0, 0);
  RawEndpoint client(tc.world, "tester");
  auto view = tc.nodes[0]->view();
  std::string key = keys_owned_by(*view, "m0", 1)[0];

  // Ask a worker that is not in the replica set.
  auto replicas = view->replicas_of(key);
  Address wrong;
  for (const auto& node : {"m0", "m1", "m2"}) {
    for (uint32_t w = 0; w < 2; ++w) {
      WorkerAddress cand{node, w};
      if (std::find(replicas.begin(), replicas.end(), cand) == replicas.end())
        wrong = worker_address(cand);
    }
  }
  auto resp = client.put(wrong, key, "v");
  REQUIRE(resp.has_value());
  CHECK(resp->status == ResponseMsg::Status::kRedirect);
  REQUIRE_FALSE(resp->addresses.empty());
  // Redirection terminates: one hop to the advertised owner succeeds.
  auto retry = client.put(resp->addresses.front(), key, "v");
  REQUIRE(retry.has_value());
  CHECK(retry->status == ResponseMsg::Status::kOk);

  // The advertised set matches the placement rule.
  std::set<std::pair<std::string, int32_t>> advertised;
  for (const auto& a : resp->addresses)
    advertised.insert({a.node_id, a.worker});
  for (const auto& r : replicas)
    CHECK(advertised.count({r.node_id, static_cast<int32_t>(r.worker_index)}));
}

TEST_CASE("gossip fans out one entry per other replica and is idempotent") {
  TestCluster tc(3, 0, 1);
  RawEndpoint client(tc.world, "tester");

  // Two memory node replicas, single worker each.
  ReplicationVector rv;
  rv.node_replicas = {2, 0};
  rv.worker_replicas = {1, 1};
  BroadcastMsg change;
  change.event = BroadcastMsg::Event::kRvChanged;
  change.key = "hotkey";
  change.rv = rv;
  tc.world.net().broadcast(change, "");
  tc.world.run_for(50);

  auto view = tc.nodes[0]->view();
  auto replicas = view->replicas_of("hotkey");
  REQUIRE_EQ(replicas.size(), 2);

  auto put = client.put(worker_address(replicas[0]), "hotkey", "v1");
  REQUIRE(put.has_value());
  REQUIRE(put->status == ResponseMsg::Status::kOk);

  REQUIRE(tc.settle());
  auto cells = tc.stored_cells("hotkey");
  REQUIRE_EQ(cells.size(), 2);  // exactly the replica set, exactly one entry each
  CHECK(cells[0].second == cells[1].second);

  // Duplicate delivery of the same gossip: re-inject the stored cell.
  StorageNode* other = tc.node(replicas[1].node_id);
  Worker& recipient = other->worker(replicas[1].worker_index);
  uint64_t before = recipient.store().mutations();
  GossipMsg dup;
  dup.sender = worker_address(replicas[0]);
  dup.entries = {{"hotkey", cells[0].second}};
  recipient.on_gossip(dup, *other->view(), tc.world.net());
  recipient.on_gossip(dup, *other->view(), tc.world.net());
  CHECK_EQ(recipient.store().mutations(), before);  // state unchanged
}

TEST_CASE("empty dirty set gossips nothing") {
  TestCluster tc(2, 0, 0);
  REQUIRE(tc.settle());
  size_t before = tc.world.net().in_flight();
  tc.nodes[0]->worker(0).gossip_round(*tc.nodes[0]->view(), tc.world.net());
  CHECK_EQ(tc.world.net().in_flight(), before);
}

TEST_CASE("memory and disk serde round trip; truncation is surfaced") {
  SUBCASE("mem identity") {
    MemStore store;
    LwwCell cell{{5, 1, 0}, "payload"};
    store.put("k", cell);
    CHECK(*store.get("k") == cell);
  }

  SUBCASE("disk round trip is byte-exact") {
    auto dir = fresh_test_dir("ebs");
    EbsStore store(dir, "e0", 0);
    std::mt19937_64 rng(17);
    for (int i = 0; i < 50; ++i) {
      std::string key = "key/" + std::to_string(i);  // urlencoded on disk
      std::string payload;
      for (int b = 0; b < int(rng() % 64); ++b)
        payload.push_back(static_cast<char>(rng() & 0xff));
      LwwCell cell{{rng() % 1000, uint32_t(rng() % 8), uint32_t(i)}, payload};
      store.put(key, cell);
      auto back = store.get(key);
      REQUIRE(back.has_value());
      CHECK(encode_cell(*back) == encode_cell(cell));
    }
  }

  SUBCASE("truncated file is an integrity fault, not a crash") {
    auto dir = fresh_test_dir("ebs_trunc");
    EbsStore store(dir, "e0", 0);
    store.put("k", {{5, 1, 0}, "payload"});
    auto file = store.dir() / url_encode("k");
    std::filesystem::resize_file(file, 3);
    CHECK_FALSE(store.get("k").has_value());
    CHECK_EQ(store.integrity_faults(), 1);
  }
}

TEST_CASE("node join migrates exactly the ring-diff keys") {
  TestCluster tc(1, 1, 0, InMemoryTransport::Options(), 2, 2);
  RawEndpoint client(tc.world, "tester");
  auto view0 = tc.nodes[0]->view();

  // Load 80 keys, all on m0 (the only memory node).
  std::map<std::string, LwwCell> acked;
  for (int i = 0; i < 80; ++i) {
    std::string key = "k" + std::to_string(i);
    auto target = view0->replicas_of(key).front();
    auto resp = client.put(worker_address(target), key, "v" + std::to_string(i));
    REQUIRE(resp.has_value());
    REQUIRE(resp->status == ResponseMsg::Status::kOk);
    acked[key] = *resp->cell;
  }
  REQUIRE(tc.settle());

  // Oracle: the keys the joiner must receive are those whose post-join
  // lookup includes it.
  MetaViewPtr view1 = with_member(view0, Tier::kMem, {"m1"});
  std::set<std::string> expected_on_joiner;
  for (const auto& [key, _] : acked)
    for (const auto& w : view1->replicas_of(key))
      if (w.node_id == "m1") expected_on_joiner.insert(key);
  REQUIRE_FALSE(expected_on_joiner.empty());

  StorageNode* joiner = tc.join_node("m1", Tier::kMem, 2, tc.nodes[0]->view());
  REQUIRE(tc.settle());

  std::set<std::string> on_joiner;
  for (size_t w = 0; w < joiner->worker_count(); ++w)
    for (const auto& key : joiner->worker(w).store().keys())
      on_joiner.insert(key);
  CHECK_EQ(on_joiner, expected_on_joiner);

  // Every pre-join acked write is still readable at its current owners.
  for (const auto& [key, cell] : acked) {
    auto cells = tc.stored_cells(key);
    REQUIRE_FALSE(cells.empty());
    for (const auto& [addr, got] : cells) CHECK(dominates(got, cell));
  }

  // Keys m0 no longer owns were dropped after handoff acks.
  StorageNode* m0 = tc.node("m0");
  for (size_t w = 0; w < m0->worker_count(); ++w)
    for (const auto& key : m0->worker(w).store().keys()) {
      bool still_owner = false;
      for (const auto& r : joiner->view()->replicas_of(key))
        if (r.node_id == "m0" && r.worker_index == w) still_owner = true;
      CHECK(still_owner);
    }
}

TEST_CASE("join broadcast reaches every role") {
  TestCluster tc(1, 1, 0);
  // A passive probe standing in for routing/monitor nodes.
  Inbox* probe =
      tc.world.net().register_endpoint({"probe", Address::kControlPlane});
  tc.join_node("m9", Tier::kMem, 2, tc.nodes[0]->view());
  tc.world.run_for(50);
  bool seen = false;
  for (const auto& msg : *probe)
    if (auto* b = std::get_if<BroadcastMsg>(&msg))
      if (b->event == BroadcastMsg::Event::kNodeJoined && b->node_id == "m9")
        seen = true;
  CHECK(seen);
}

TEST_CASE("node depart hands its whole store to the new owners") {
  TestCluster tc(3, 0, 0);
  RawEndpoint client(tc.world, "tester");
  auto view0 = tc.nodes[0]->view();

  std::map<std::string, LwwCell> acked;
  for (int i = 0; i < 60; ++i) {
    std::string key = "k" + std::to_string(i);
    auto target = view0->replicas_of(key).front();
    auto resp = client.put(worker_address(target), key, "v" + std::to_string(i));
    REQUIRE(resp.has_value());
    acked[key] = *resp->cell;
  }
  REQUIRE(tc.settle());

  // Oracle: ownership after removal equals the ring_remove prediction.
  MetaViewPtr after = without_member(view0, Tier::kMem, "m1");

  StorageNode* departing = tc.node("m1");
  bool had_keys = false;
  for (size_t w = 0; w < departing->worker_count(); ++w)
    had_keys |= departing->worker(w).store().size() > 0;
  REQUIRE(had_keys);

  departing->begin_departure();
  REQUIRE(tc.settle());
  CHECK(departing->drained());

  for (const auto& [key, cell] : acked) {
    auto expected = after->replicas_of(key);
    auto cells = tc.stored_cells(key);
    REQUIRE_EQ(cells.size(), expected.size());
    for (const auto& [addr, got] : cells) {
      CHECK(std::find(expected.begin(), expected.end(), addr) !=
            expected.end());
      CHECK(dominates(got, cell));
    }
  }
}

TEST_CASE("depart with no keys is broadcast only") {
  TestCluster tc(2, 0, 0);
  REQUIRE(tc.settle());
  StorageNode* m1 = tc.node("m1");
  m1->begin_departure();
  CHECK(m1->drained());  // nothing to hand off
  REQUIRE(tc.settle());
}

TEST_CASE("rv update moves data across tiers and back") {
  TestCluster tc(1, 3, 2);
  RawEndpoint client(tc.world, "tester");
  auto view = tc.nodes[0]->view();
  std::string key = "movable";

  auto resp = client.put(worker_address(view->replicas_of(key).front()), key,
                         "payload");
  REQUIRE(resp.has_value());
  REQUIRE(resp->status == ResponseMsg::Status::kOk);
  REQUIRE(tc.settle());
  CHECK_EQ(tc.stored_cells(key).size(), 3);  // 1 mem + 2 ebs (default, k=2)

  // Demote: all replicas to the disk tier, k+1 of them.
  ReplicationVector demoted;
  demoted.node_replicas = {0, 3};
  demoted.worker_replicas = {1, 1};
  BroadcastMsg change;
  change.event = BroadcastMsg::Event::kRvChanged;
  change.key = key;
  change.rv = demoted;
  tc.world.net().broadcast(change, "");
  REQUIRE(tc.settle());

  auto cells = tc.stored_cells(key);
  CHECK_EQ(cells.size(), 3);
  for (const auto& [addr, _] : cells) CHECK_EQ(addr.node_id[0], 'e');

  // Promote one replica back to memory; total stays k+1.
  ReplicationVector promoted;
  promoted.node_replicas = {1, 2};
  promoted.worker_replicas = {1, 1};
  change.rv = promoted;
  tc.world.net().broadcast(change, "");
  REQUIRE(tc.settle());

  cells = tc.stored_cells(key);
  CHECK_EQ(cells.size(), 3);
  int mem = 0;
  for (const auto& [addr, _] : cells) mem += addr.node_id[0] == 'm';
  CHECK_EQ(mem, 1);
}

TEST_CASE("no-op rv update causes no gossip traffic") {
  TestCluster tc(1, 3, 2);
  RawEndpoint client(tc.world, "tester");
  auto view = tc.nodes[0]->view();
  std::string key = "steady";
  client.put(worker_address(view->replicas_of(key).front()), key, "v");
  REQUIRE(tc.settle());

  BroadcastMsg change;
  change.event = BroadcastMsg::Event::kRvChanged;
  change.key = key;
  change.rv = default_vector(2);  // unchanged
  tc.world.net().broadcast(change, "");
  tc.world.run_for(30);
  for (auto* node : tc.nodes)
    for (size_t w = 0; w < node->worker_count(); ++w)
      CHECK_EQ(node->worker(w).dirty_count(), 0);
}

TEST_CASE("metadata values are lattice cells merged under concurrency") {
  TestCluster tc(3, 0, 0);
  RawEndpoint a(tc.world, "writer_a");
  RawEndpoint b(tc.world, "writer_b");
  std::string key = meta_key(MetaKind::kRv, {"contested"});
  auto view = tc.nodes[0]->view();
  auto replicas = view->replicas_of(key);
  REQUIRE_EQ(replicas.size(), 3);  // pinned memory replication

  auto ra = a.put(worker_address(replicas[0]), key, "M:2,1;E:1,1", true);
  auto rb = b.put(worker_address(replicas[1]), key, "M:3,1;E:0,1", true);
  REQUIRE((ra.has_value() && rb.has_value()));
  REQUIRE(tc.settle());

  LwwCell winner = oracle_merge({*ra->cell, *rb->cell});
  auto cells = tc.stored_cells(key);
  REQUIRE_EQ(cells.size(), 3);
  for (const auto& [addr, got] : cells)
    CHECK(encode_cell(got) == encode_cell(winner));
}

TEST_CASE("convergence under concurrent writes with gossip faults") {
  InMemoryTransport::Options faults;
  faults.gossip_dup_prob = 0.3;
  faults.gossip_reorder_ms = 150;
  faults.seed = 1234;
  TestCluster tc(2, 2, 1, faults, 2, 2);
  RawEndpoint c1(tc.world, "c1");
  RawEndpoint c2(tc.world, "c2");

  auto view = tc.nodes[0]->view();
  std::map<std::string, std::vector<LwwCell>> acked;
  std::mt19937_64 rng(7);
  for (int round = 0; round < 120; ++round) {
    std::string key = "k" + std::to_string(rng() % 12);
    auto replicas = view->replicas_of(key);
    // Hit random replicas from both clients: multi-master.
    auto& client = (rng() % 2) ? c1 : c2;
    auto target = replicas[rng() % replicas.size()];
    auto resp = client.put(worker_address(target), key,
                           "v" + std::to_string(round));
    REQUIRE(resp.has_value());
    if (resp->status == ResponseMsg::Status::kOk)
      acked[key].push_back(*resp->cell);
  }
  REQUIRE(tc.settle(120000));

  for (const auto& [key, cells] : acked) {
    LwwCell expected = oracle_merge(cells);
    auto stored = tc.stored_cells(key);
    CHECK_EQ(stored.size(), view->replicas_of(key).size());
    for (const auto& [addr, got] : stored)
      CHECK(encode_cell(got) == encode_cell(expected));
  }
}

TEST_CASE("workers share nothing: only messages cross the boundary") {
  TestCluster tc(2, 0, 0);
  RawEndpoint client(tc.world, "tester");
  auto view = tc.nodes[0]->view();

  // Distinct stores per worker.
  std::set<const TierStore*> stores;
  for (auto* node : tc.nodes)
    for (size_t w = 0; w < node->worker_count(); ++w)
      stores.insert(&node->worker(w).store());
  CHECK_EQ(stores.size(), 4);

  // A key owned solely by one m0 worker: m1 stores never move.
  std::string key = keys_owned_by(*view, "m0", 1)[0];
  StorageNode* m1 = tc.node("m1");
  std::vector<uint64_t> before;
  for (size_t w = 0; w < m1->worker_count(); ++w)
    before.push_back(m1->worker(w).store().mutations());
  for (int i = 0; i < 20; ++i)
    client.put(worker_address(view->replicas_of(key).front()), key, "v");
  REQUIRE(tc.settle());
  for (size_t w = 0; w < m1->worker_count(); ++w)
    CHECK_EQ(m1->worker(w).store().mutations(), before[w]);

  // Replicate onto m1: its store now changes, but only via gossip delivery.
  ReplicationVector rv;
  rv.node_replicas = {2, 0};
  rv.worker_replicas = {1, 1};
  BroadcastMsg change;
  change.event = BroadcastMsg::Event::kRvChanged;
  change.key = key;
  change.rv = rv;
  tc.world.net().broadcast(change, "");
  REQUIRE(tc.settle());
  uint64_t after = 0;
  for (size_t w = 0; w < m1->worker_count(); ++w)
    after += m1->worker(w).store().mutations() - before[w];
  CHECK_EQ(after, 1);  // exactly the gossiped entry
}

}  // namespace
}  // namespace annakv
