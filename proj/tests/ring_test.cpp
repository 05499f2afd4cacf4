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

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "doctest.h"

namespace annakv {
namespace {

// 8-bit positions keep the clockwise-walk fixtures human-checkable.
uint64_t toy_hash(std::string_view s) { return fnv1a64(s) & 0xff; }

// Independent walk oracle: linear scan of the sorted point list from the
// first position >= hash(key), wrapping, collecting distinct members.
std::vector<std::string> oracle_lookup(const HashRing& ring,
                                       std::string_view key, size_t n,
                                       HashFn hash) {
  std::vector<std::pair<uint64_t, std::string>> sorted(ring.points().begin(),
                                                       ring.points().end());
  uint64_t h = hash(key);
  size_t start = 0;
  while (start < sorted.size() && sorted[start].first < h) ++start;
  std::vector<std::string> out;
  for (size_t j = 0; j < sorted.size(); ++j) {
    const std::string& m = sorted[(start + j) % sorted.size()].second;
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    if (out.size() == std::min(n, ring.member_count())) break;
  }
  return out;
}

TEST_CASE("hash functions match frozen vectors") {
  // FNV-1a 64 official vectors.
  CHECK_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  CHECK_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  CHECK_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  // Ring hash vectors cross-computed with an independent implementation.
  CHECK_EQ(ring_hash64(""), 0xc3817c016ba4ff30ull);
  CHECK_EQ(ring_hash64("a"), 0x5f29c2aadd9b8527ull);
  CHECK_EQ(ring_hash64("foobar"), 0x5df295413403de4full);
  CHECK_EQ(ring_hash64("anna"), 0x73ab02fefcda7c90ull);
  CHECK_EQ(ring_hash64("n0:0"), 0x49d8780acc4509efull);
}

TEST_CASE("insert places exactly weight points") {
  HashRing ring;
  CHECK(ring.insert({"m1", 100}));
  CHECK_EQ(ring.point_count(), 100);
  CHECK_EQ(ring.member_count(), 1);
}

TEST_CASE("insert is idempotent, conflicting weight is rejected") {
  HashRing ring;
  ring.insert({"m1", 10});
  HashRing before = ring;
  CHECK(ring.insert({"m1", 10}));
  CHECK(ring == before);
  CHECK_FALSE(ring.insert({"m1", 20}));
  CHECK(ring == before);
}

TEST_CASE("points sit at hash(member:index)") {
  HashRing ring(toy_hash);
  ring.insert({"a", 2});
  REQUIRE_EQ(toy_hash("a:0") != toy_hash("a:1"), true);
  CHECK(ring.points().count(toy_hash("a:0")));
  CHECK(ring.points().count(toy_hash("a:1")));
  CHECK_EQ(ring.point_count(), 2);
}

TEST_CASE("remove semantics") {
  HashRing ring;
  ring.insert({"m1", 10});

  SUBCASE("removing the only member empties the ring") {
    CHECK(ring.remove("m1"));
    CHECK(ring.empty());
    CHECK_EQ(ring.point_count(), 0);
  }

  SUBCASE("remove inverts a fresh insert") {
    HashRing before = ring;
    ring.insert({"m2", 10});
    CHECK(ring.remove("m2"));
    CHECK(ring == before);
  }

  SUBCASE("removing an absent member is a flagged no-op") {
    HashRing before = ring;
    CHECK_FALSE(ring.remove("ghost"));
    CHECK(ring == before);
  }
}

TEST_CASE("keys vacated by a removed member remap to ring successors") {
  HashRing ring;
  for (int i = 0; i < 3; ++i) ring.insert({"n" + std::to_string(i), 50});

  std::map<std::string, std::vector<std::string>> before;
  for (int i = 0; i < 10000; ++i) {
    std::string key = "key" + std::to_string(i);
    before[key] = ring.lookup(key, 2);  // owner plus its successor
  }

  ring.remove("n1");
  for (auto& [key, owners] : before) {
    std::string now = ring.lookup(key, 1)[0];
    if (owners[0] == "n1") {
      CHECK_EQ(now, owners[1]);  // exactly the old successor
    } else {
      CHECK_EQ(now, owners[0]);  // untouched
    }
  }
}

TEST_CASE("lookup basics") {
  HashRing ring;
  ring.insert({"solo", 8});
  CHECK_EQ(ring.lookup("anything", 3),
           std::vector<std::string>{"solo"});

  ring.insert({"other", 8});
  auto all = ring.lookup("k", 10);
  CHECK_EQ(all.size(), 2);  // n >= |members| exhausts the ring

  HashRing empty;
  CHECK_THROWS_AS(empty.lookup("k", 1), std::runtime_error);
}

TEST_CASE("lookup matches the linear-scan walk oracle") {
  HashRing ring(toy_hash);
  for (const char* m : {"a", "b", "c"}) ring.insert({m, 2});
  for (const char* key : {"k", "q", "z", "alpha", "beta"}) {
    for (size_t n = 1; n <= 4; ++n)
      CHECK_EQ(ring.lookup(key, n), oracle_lookup(ring, key, n, toy_hash));
  }

  HashRing prod;
  for (int i = 0; i < 6; ++i) prod.insert({"node" + std::to_string(i), 30});
  for (int i = 0; i < 200; ++i) {
    std::string key = "k" + std::to_string(i);
    for (size_t n : {1, 2, 3, 6, 9})
      CHECK_EQ(prod.lookup(key, n), oracle_lookup(prod, key, n, ring_hash64));
  }
}

TEST_CASE("lookup is deterministic") {
  HashRing a, b;
  for (int i = 0; i < 4; ++i) {
    a.insert({"n" + std::to_string(i), 100});
    b.insert({"n" + std::to_string(3 - i), 100});  // different insert order
  }
  for (int i = 0; i < 100; ++i) {
    std::string key = "key" + std::to_string(i);
    CHECK_EQ(a.lookup(key, 2), b.lookup(key, 2));
  }
}

TEST_CASE("ownership balance at default weight") {
  HashRing ring;
  for (int i = 0; i < 10; ++i) ring.insert({"n" + std::to_string(i), 100});
  std::map<std::string, int> owned;
  for (int i = 0; i < 20000; ++i)
    owned[ring.lookup("key" + std::to_string(i), 1)[0]]++;
  int mx = 0, mn = 1 << 30;
  for (auto& [_, n] : owned) {
    mx = std::max(mx, n);
    mn = std::min(mn, n);
  }
  CHECK_LE(double(mx) / mn, 1.5);
}

TEST_CASE("adding one member reassigns about 1/(n+1) of keys") {
  HashRing ring;
  int n = 5;
  for (int i = 0; i < n; ++i) ring.insert({"n" + std::to_string(i), 100});
  std::vector<std::string> before;
  int samples = 20000;
  for (int i = 0; i < samples; ++i)
    before.push_back(ring.lookup("key" + std::to_string(i), 1)[0]);
  ring.insert({"joiner", 100});
  int moved = 0;
  for (int i = 0; i < samples; ++i)
    if (ring.lookup("key" + std::to_string(i), 1)[0] != before[i]) ++moved;
  double fraction = double(moved) / samples;
  double expected = 1.0 / (n + 1);
  CHECK_GE(fraction, 0.5 * expected);
  CHECK_LE(fraction, 2.0 * expected);
}

TEST_CASE("ring text round trips") {
  HashRing ring;
  ring.insert({"n1", 100});
  ring.insert({"n0", 50});
  std::string text = ring.to_text();
  CHECK_EQ(text, "n0,50\nn1,100");
  auto back = HashRing::from_text(text);
  REQUIRE(back.has_value());
  CHECK(*back == ring);
  CHECK(HashRing::from_text("")->empty());
  CHECK_FALSE(HashRing::from_text("garbage"));
  CHECK_FALSE(HashRing::from_text("n0,0"));
}

TEST_CASE("responsible_workers follows the per-tier walk") {
  RingSet rings;
  for (int i = 0; i < 4; ++i)
    at_tier(rings.global, Tier::kMem).insert({"m" + std::to_string(i), 100});
  for (int i = 0; i < 4; ++i)
    at_tier(rings.global, Tier::kEbs).insert({"e" + std::to_string(i), 100});
  rings.local = make_local_rings({4, 4});

  SUBCASE("default vector k=2 yields one memory pair and two disk pairs") {
    auto placed = responsible_workers("foo", default_vector(2), rings);
    CHECK_EQ(at_tier(placed, Tier::kMem).size(), 1);
    CHECK_EQ(at_tier(placed, Tier::kEbs).size(), 2);
  }

  SUBCASE("full replication covers every worker") {
    ReplicationVector rv;
    rv.node_replicas = {4, 0};
    rv.worker_replicas = {4, 1};
    auto placed = responsible_workers("foo", rv, rings);
    CHECK_EQ(at_tier(placed, Tier::kMem).size(), 16);
    CHECK_EQ(at_tier(placed, Tier::kEbs).size(), 0);
  }

  SUBCASE("memory nodes are the clockwise-first walk") {
    ReplicationVector rv;
    rv.node_replicas = {2, 0};
    rv.worker_replicas = {1, 1};
    auto placed = responsible_workers("foo", rv, rings);
    auto expect_nodes = oracle_lookup(at_tier(rings.global, Tier::kMem),
                                      "foo", 2, ring_hash64);
    REQUIRE_EQ(at_tier(placed, Tier::kMem).size(), 2);
    CHECK_EQ(at_tier(placed, Tier::kMem)[0].node_id, expect_nodes[0]);
    CHECK_EQ(at_tier(placed, Tier::kMem)[1].node_id, expect_nodes[1]);
  }

  SUBCASE("a tier demanding replicas with no nodes is an error") {
    RingSet bare;
    bare.local = make_local_rings({1, 1});
    at_tier(bare.global, Tier::kMem).insert({"m0", 100});
    CHECK_THROWS_AS(responsible_workers("foo", default_vector(2), bare),
                    std::runtime_error);
  }

  SUBCASE("placement is a pure function of inputs") {
    auto a = responsible_workers("bar", default_vector(2), rings);
    auto b = responsible_workers("bar", default_vector(2), rings);
    CHECK(a == b);
  }
}

}  // namespace
}  // namespace annakv
