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

#include "annakv/metadata.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace annakv {

namespace {

std::string_view kind_tag(MetaKind kind) {
  switch (kind) {
    case MetaKind::kRing:
      return "ring";
    case MetaKind::kRv:
      return "rv";
    case MetaKind::kNodeStats:
      return "stats/node";
    case MetaKind::kKeyStats:
      return "stats/keys";
    case MetaKind::kLatency:
      return "stats/latency";
  }
  return "";
}

std::optional<uint32_t> parse_u32(std::string_view s) {
  uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<uint64_t> parse_u64(std::string_view s) {
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string buf(s);
  char* end = nullptr;
  double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Splits on a delimiter, keeping empty fields.
std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// "<R>,<T>" pair of one tier.
std::optional<std::pair<uint32_t, uint32_t>> parse_tier_pair(
    std::string_view s) {
  auto fields = split(s, ',');
  if (fields.size() != 2) return std::nullopt;
  auto r = parse_u32(fields[0]);
  auto t = parse_u32(fields[1]);
  if (!r || !t) return std::nullopt;
  return std::make_pair(*r, *t);
}

}  // namespace

std::string encode_rv(const ReplicationVector& rv) {
  std::string out = "M:";
  out += std::to_string(rv.r(Tier::kMem));
  out += ',';
  out += std::to_string(rv.t(Tier::kMem));
  out += ";E:";
  out += std::to_string(rv.r(Tier::kEbs));
  out += ',';
  out += std::to_string(rv.t(Tier::kEbs));
  return out;
}

std::optional<ReplicationVector> decode_rv(std::string_view text) {
  auto halves = split(text, ';');
  if (halves.size() != 2) return std::nullopt;
  if (halves[0].substr(0, 2) != "M:" || halves[1].substr(0, 2) != "E:")
    return std::nullopt;
  auto mem = parse_tier_pair(halves[0].substr(2));
  auto ebs = parse_tier_pair(halves[1].substr(2));
  if (!mem || !ebs) return std::nullopt;
  ReplicationVector rv;
  rv.node_replicas = {mem->first, ebs->first};
  rv.worker_replicas = {mem->second, ebs->second};
  if (rv.t(Tier::kMem) == 0 || rv.t(Tier::kEbs) == 0) return std::nullopt;
  return rv;
}

std::string meta_key(MetaKind kind, const std::vector<std::string>& parts) {
  std::string out(kMetaPrefix);
  out += kind_tag(kind);
  for (const auto& part : parts) {
    if (part.find('/') != std::string::npos || is_meta_key(part))
      throw std::invalid_argument("invalid metadata key part: " + part);
    out += '/';
    out += part;
  }
  return out;
}

std::optional<ParsedMetaKey> parse_meta_key(std::string_view key) {
  if (!is_meta_key(key)) return std::nullopt;
  std::string_view rest = key.substr(kMetaPrefix.size());
  for (MetaKind kind : {MetaKind::kNodeStats, MetaKind::kKeyStats,
                        MetaKind::kLatency, MetaKind::kRing, MetaKind::kRv}) {
    std::string_view tag = kind_tag(kind);
    if (rest.substr(0, tag.size()) != tag) continue;
    std::string_view tail = rest.substr(tag.size());
    if (!tail.empty() && tail[0] != '/') continue;
    ParsedMetaKey parsed{kind, {}};
    if (!tail.empty()) {
      for (auto part : split(tail.substr(1), '/'))
        parsed.parts.emplace_back(part);
    }
    return parsed;
  }
  return std::nullopt;
}

std::string encode_node_stats(const NodeStats& s) {
  std::string out(tier_name(s.tier));
  out += ',';
  out += format_double(s.occupancy);
  out += ',';
  out += format_double(s.storage_fraction);
  return out;
}

std::optional<NodeStats> decode_node_stats(std::string_view text,
                                           const NodeId& node_id,
                                           uint64_t epoch) {
  auto fields = split(text, ',');
  if (fields.size() != 3) return std::nullopt;
  auto tier = tier_from_name(fields[0]);
  auto occ = parse_double(fields[1]);
  auto frac = parse_double(fields[2]);
  if (!tier || !occ || !frac) return std::nullopt;
  return NodeStats{node_id, *tier, *occ, *frac, epoch};
}

std::string encode_key_stats(const std::vector<KeyAccessRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    if (!out.empty()) out += '\n';
    out += rec.key;
    out += ',';
    out += std::to_string(rec.count);
  }
  return out;
}

std::optional<std::vector<KeyAccessRecord>> decode_key_stats(
    std::string_view text) {
  std::vector<KeyAccessRecord> out;
  if (text.empty()) return out;
  for (auto line : split(text, '\n')) {
    size_t comma = line.rfind(',');
    if (comma == std::string_view::npos) return std::nullopt;
    auto count = parse_u64(line.substr(comma + 1));
    if (!count) return std::nullopt;
    out.push_back({std::string(line.substr(0, comma)), *count});
  }
  return out;
}

std::string encode_latency(double mean_ms, uint64_t request_count) {
  return format_double(mean_ms) + "," + std::to_string(request_count);
}

std::optional<LatencyReport> decode_latency(std::string_view text,
                                            const std::string& client_id,
                                            uint64_t epoch) {
  auto fields = split(text, ',');
  if (fields.size() != 2) return std::nullopt;
  auto mean = parse_double(fields[0]);
  auto count = parse_u64(fields[1]);
  if (!mean || !count || *count == 0) return std::nullopt;
  return LatencyReport{client_id, epoch, *mean, *count};
}

}  // namespace annakv
