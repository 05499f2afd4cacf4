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

#include "annakv/monitor.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"

namespace annakv {
namespace {

ClusterSnapshot tiny_snapshot() {
  ClusterSnapshot snap;
  snap.epoch = 3;
  at_tier(snap.membership, Tier::kMem) = {"m0"};
  snap.node_stats = {{"m0", Tier::kMem, 0.2, 0.3, 3}};
  return snap;
}

// Independent arithmetic for mean and population deviation.
std::pair<double, double> oracle_moments(const std::vector<double>& counts) {
  double sum = 0;
  for (double c : counts) sum += c;
  double mean = sum / double(counts.size());
  double ss = 0;
  for (double c : counts) ss += (c - mean) * (c - mean);
  return {mean, std::sqrt(ss / double(counts.size()))};
}

TEST_CASE("summary matches the direct arithmetic oracle") {
  auto snap = tiny_snapshot();
  std::vector<double> counts = {1, 1, 1, 1, 100};
  for (size_t i = 0; i < counts.size(); ++i)
    snap.key_counts["k" + std::to_string(i)] = counts[i];

  Knobs knobs;  // s = 3
  Summary s = summarize(snap, knobs);
  auto [mean, stddev] = oracle_moments(counts);
  CHECK_EQ(s.mean_freq, doctest::Approx(mean));            // 20.8
  CHECK_EQ(s.std_freq, doctest::Approx(stddev));           // 39.600
  CHECK_EQ(s.hot_threshold, doctest::Approx(mean + 3 * stddev));  // 139.6
  CHECK_EQ(s.mean_freq, doctest::Approx(20.8));
  CHECK_EQ(s.std_freq, doctest::Approx(39.6).epsilon(0.001));
  CHECK_EQ(s.hot_threshold, doctest::Approx(139.6).epsilon(0.001));
  // No key is hot at three deviations.
  for (double c : counts) CHECK_LT(c, s.hot_threshold);
}

TEST_CASE("equal counts collapse the deviation to zero") {
  auto snap = tiny_snapshot();
  for (int i = 0; i < 7; ++i) snap.key_counts["k" + std::to_string(i)] = 4;
  Summary s = summarize(snap, Knobs{});
  CHECK_EQ(s.std_freq, doctest::Approx(0.0));
  CHECK_EQ(s.hot_threshold, doctest::Approx(4.0));
  CHECK_EQ(s.cold_threshold, doctest::Approx(4.0));
}

TEST_CASE("a single latency report passes through as the average") {
  auto snap = tiny_snapshot();
  snap.latency_reports = {{"c0", 3, 4.0, 17}};
  Summary s = summarize(snap, Knobs{});
  CHECK_EQ(s.avg_latency_ms, doctest::Approx(4.0));
}

TEST_CASE("zero live nodes is an error") {
  ClusterSnapshot snap;
  CHECK_THROWS_AS(summarize(snap, Knobs{}), std::runtime_error);
}

TEST_CASE("unobserved keys count zero only when they carry a vector") {
  auto snap = tiny_snapshot();
  snap.key_counts["seen"] = 10;
  snap.rv_entries["unseen_with_rv"] = default_vector(1);
  // Population of 2: {10, 0}.
  Summary s = summarize(snap, Knobs{});
  CHECK_EQ(s.key_population, 2);
  CHECK_EQ(s.mean_freq, doctest::Approx(5.0));
  CHECK_EQ(s.std_freq, doctest::Approx(5.0));
}

TEST_CASE("aggregation is linear in how records split across nodes") {
  // One node reporting {a:5} equals two fictitious nodes {a:3} and {a:2}
  // once counts are summed into the snapshot.
  ClusterSnapshot merged = tiny_snapshot();
  merged.key_counts["a"] = 5;

  ClusterSnapshot split = tiny_snapshot();
  split.key_counts["a"] = 0;
  for (double part : {3.0, 2.0}) split.key_counts["a"] += part;

  Summary s1 = summarize(merged, Knobs{});
  Summary s2 = summarize(split, Knobs{});
  CHECK_EQ(s1.mean_freq, s2.mean_freq);
  CHECK_EQ(s1.std_freq, s2.std_freq);
  CHECK_EQ(s1.hot_threshold, s2.hot_threshold);
}

TEST_CASE("per-node aggregates average per tier") {
  ClusterSnapshot snap;
  at_tier(snap.membership, Tier::kMem) = {"m0", "m1"};
  at_tier(snap.membership, Tier::kEbs) = {"e0"};
  snap.node_stats = {{"m0", Tier::kMem, 0.4, 0.2, 1},
                     {"m1", Tier::kMem, 0.2, 0.4, 1},
                     {"e0", Tier::kEbs, 0.9, 0.5, 1}};
  Summary s = summarize(snap, Knobs{});
  CHECK_EQ(s.mem_occupancy, doctest::Approx(0.3));
  CHECK_EQ(at_tier(s.avg_storage, Tier::kMem), doctest::Approx(0.3));
  CHECK_EQ(at_tier(s.avg_storage, Tier::kEbs), doctest::Approx(0.5));
}

}  // namespace
}  // namespace annakv
