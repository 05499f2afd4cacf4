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

#ifndef INCLUDE_ANNAKV_LATTICE_HPP_
#define INCLUDE_ANNAKV_LATTICE_HPP_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "annakv/bytes.hpp"
#include "annakv/clock.hpp"

namespace annakv {

// Write stamp with a total order: (clock_ms, node_seq, op_seq) compared
// lexicographically. node_seq identifies the writer; op_seq is the writer's
// own counter, so no writer ever emits two equal stamps.
struct Timestamp {
  uint64_t clock_ms = 0;
  uint32_t node_seq = 0;
  uint32_t op_seq = 0;

  auto operator<=>(const Timestamp&) const = default;
};

// Last-writer-wins cell: the storage lattice. Every stored value, data and
// metadata alike, is one of these. merge keeps the cell with the greater
// stamp and never fabricates a payload.
struct LwwCell {
  Timestamp ts;
  std::string payload;

  bool operator==(const LwwCell&) const = default;

  // Deletion is a write of the reserved empty-payload marker; tombstones
  // are retained so merge semantics stay intact.
  bool is_tombstone() const { return payload.empty(); }
};

inline const LwwCell& merge(const LwwCell& a, const LwwCell& b) {
  return b.ts > a.ts ? b : a;
}

// True iff merge(a, b) == a.
inline bool dominates(const LwwCell& a, const LwwCell& b) {
  return a.ts >= b.ts;
}

// Canonical byte encoding, used verbatim for gossip entries and disk-tier
// files: u64 clock_ms, u32 node_seq, u32 op_seq, u32 payload length,
// payload bytes. All big-endian.
inline std::string encode_cell(const LwwCell& cell) {
  std::string out;
  out.reserve(20 + cell.payload.size());
  put_u64(out, cell.ts.clock_ms);
  put_u32(out, cell.ts.node_seq);
  put_u32(out, cell.ts.op_seq);
  put_str32(out, cell.payload);
  return out;
}

inline std::optional<LwwCell> decode_cell(ByteReader& r) {
  auto clock_ms = r.u64();
  auto node_seq = r.u32();
  auto op_seq = r.u32();
  if (!clock_ms || !node_seq || !op_seq) return std::nullopt;
  auto payload = get_str32(r);
  if (!payload) return std::nullopt;
  return LwwCell{{*clock_ms, *node_seq, *op_seq}, std::move(*payload)};
}

// Rejects trailing garbage; disk loads go through here.
inline std::optional<LwwCell> decode_cell(std::string_view buf) {
  ByteReader r(buf);
  auto cell = decode_cell(r);
  if (!cell || !r.done()) return std::nullopt;
  return cell;
}

// Per-writer stamp source. writer_id must be unique across all workers in
// the cluster; op_seq makes stamps unique even when the clock stalls.
class TimestampGen {
 public:
  TimestampGen(const Clock& clock, uint32_t writer_id)
      : clock_(clock), writer_id_(writer_id) {}

  Timestamp next() { return {clock_.now_ms(), writer_id_, op_seq_++}; }
  uint32_t writer_id() const { return writer_id_; }

 private:
  const Clock& clock_;
  uint32_t writer_id_;
  uint32_t op_seq_ = 0;
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_LATTICE_HPP_
