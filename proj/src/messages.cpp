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

#include "annakv/messages.hpp"

#include "annakv/bytes.hpp"

namespace annakv {

namespace {

void put_address(std::string& out, const Address& a) {
  put_str16(out, a.node_id);
  put_u32(out, static_cast<uint32_t>(a.worker));
}

std::optional<Address> get_address(ByteReader& r) {
  auto node = get_str16(r);
  auto worker = r.u32();
  if (!node || !worker) return std::nullopt;
  return Address{std::move(*node), static_cast<int32_t>(*worker)};
}

std::string encode_body(const RequestMsg& m) {
  std::string out;
  put_u64(out, m.req_id);
  put_u8(out, static_cast<uint8_t>(m.op));
  put_u8(out, static_cast<uint8_t>((m.internal ? 1 : 0) |
                                   (m.force_refresh ? 2 : 0)));
  put_address(out, m.reply_to);
  put_str16(out, m.key);
  put_str32(out, m.payload);
  return out;
}

std::optional<RequestMsg> decode_request(ByteReader& r) {
  RequestMsg m;
  auto id = r.u64();
  auto op = r.u8();
  auto flags = r.u8();
  if (!id || !op || !flags || *op > 2) return std::nullopt;
  auto reply = get_address(r);
  auto key = get_str16(r);
  auto payload = get_str32(r);
  if (!reply || !key || !payload) return std::nullopt;
  m.req_id = *id;
  m.op = static_cast<RequestMsg::Op>(*op);
  m.internal = *flags & 1;
  m.force_refresh = *flags & 2;
  m.reply_to = std::move(*reply);
  m.key = std::move(*key);
  m.payload = std::move(*payload);
  return m;
}

std::string encode_body(const ResponseMsg& m) {
  std::string out;
  put_u64(out, m.req_id);
  put_u8(out, static_cast<uint8_t>(m.status));
  put_u8(out, static_cast<uint8_t>(m.served_tier));
  put_u64(out, m.meta_version);
  put_u8(out, m.cell ? 1 : 0);
  if (m.cell) out += encode_cell(*m.cell);
  put_u16(out, static_cast<uint16_t>(m.addresses.size()));
  for (const auto& a : m.addresses) put_address(out, a);
  return out;
}

std::optional<ResponseMsg> decode_response(ByteReader& r) {
  ResponseMsg m;
  auto id = r.u64();
  auto status = r.u8();
  auto tier = r.u8();
  auto version = r.u64();
  auto has_cell = r.u8();
  if (!id || !status || !tier || !version || !has_cell || *status > 3 ||
      *tier >= kTierCount)
    return std::nullopt;
  m.req_id = *id;
  m.status = static_cast<ResponseMsg::Status>(*status);
  m.served_tier = static_cast<Tier>(*tier);
  m.meta_version = *version;
  if (*has_cell) {
    auto cell = decode_cell(r);
    if (!cell) return std::nullopt;
    m.cell = std::move(*cell);
  }
  auto count = r.u16();
  if (!count) return std::nullopt;
  for (uint16_t i = 0; i < *count; ++i) {
    auto a = get_address(r);
    if (!a) return std::nullopt;
    m.addresses.push_back(std::move(*a));
  }
  return m;
}

// Gossip and its ack share the GOSSIP wire kind; bit 1 marks the ack.
std::string encode_gossip_body(const GossipMsg& m) {
  std::string out;
  put_u8(out, m.ack_requested ? 1 : 0);
  put_address(out, m.sender);
  put_u32(out, static_cast<uint32_t>(m.entries.size()));
  for (const auto& [key, cell] : m.entries) {
    put_str16(out, key);
    out += encode_cell(cell);
  }
  return out;
}

std::string encode_gossip_body(const GossipAckMsg& m) {
  std::string out;
  put_u8(out, 2);
  put_address(out, m.sender);
  put_u32(out, static_cast<uint32_t>(m.keys.size()));
  for (const auto& key : m.keys) put_str16(out, key);
  return out;
}

std::optional<Message> decode_gossip(ByteReader& r) {
  auto flags = r.u8();
  auto sender = get_address(r);
  auto count = r.u32();
  if (!flags || !sender || !count || *flags > 2) return std::nullopt;
  if (*flags & 2) {
    GossipAckMsg m;
    m.sender = std::move(*sender);
    for (uint32_t i = 0; i < *count; ++i) {
      auto key = get_str16(r);
      if (!key) return std::nullopt;
      m.keys.push_back(std::move(*key));
    }
    return Message(std::move(m));
  }
  GossipMsg m;
  m.sender = std::move(*sender);
  m.ack_requested = *flags & 1;
  for (uint32_t i = 0; i < *count; ++i) {
    auto key = get_str16(r);
    auto cell = decode_cell(r);
    if (!key || !cell) return std::nullopt;
    m.entries.emplace_back(std::move(*key), std::move(*cell));
  }
  return Message(std::move(m));
}

std::string encode_body(const BroadcastMsg& m) {
  std::string out;
  put_u8(out, static_cast<uint8_t>(m.event));
  put_str16(out, m.node_id);
  put_u8(out, static_cast<uint8_t>(m.tier));
  put_str16(out, m.key);
  put_str16(out, encode_rv(m.rv));
  put_str32(out, m.plan_text);
  return out;
}

std::optional<BroadcastMsg> decode_broadcast(ByteReader& r) {
  BroadcastMsg m;
  auto event = r.u8();
  auto node = get_str16(r);
  auto tier = r.u8();
  auto key = get_str16(r);
  auto rv_text = get_str16(r);
  auto plan = get_str32(r);
  if (!event || !node || !tier || !key || !rv_text || !plan || *event > 6 ||
      *tier >= kTierCount)
    return std::nullopt;
  auto rv = decode_rv(*rv_text);
  if (!rv) return std::nullopt;
  m.event = static_cast<BroadcastMsg::Event>(*event);
  m.node_id = std::move(*node);
  m.tier = static_cast<Tier>(*tier);
  m.key = std::move(*key);
  m.rv = *rv;
  m.plan_text = std::move(*plan);
  return m;
}

}  // namespace

std::string encode_frame(const Envelope& env) {
  WireKind kind = WireKind::kRequest;
  std::string body;
  put_u32(body, static_cast<uint32_t>(env.to.worker));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RequestMsg>) {
          kind = WireKind::kRequest;
          body += encode_body(m);
        } else if constexpr (std::is_same_v<T, ResponseMsg>) {
          kind = WireKind::kResponse;
          body += encode_body(m);
        } else if constexpr (std::is_same_v<T, GossipMsg>) {
          kind = WireKind::kGossip;
          body += encode_gossip_body(m);
        } else if constexpr (std::is_same_v<T, GossipAckMsg>) {
          kind = WireKind::kGossip;
          body += encode_gossip_body(m);
        } else {
          kind = WireKind::kBroadcast;
          body += encode_body(m);
        }
      },
      env.msg);
  std::string out;
  out.reserve(5 + body.size());
  put_u8(out, static_cast<uint8_t>(kind));
  put_u32(out, static_cast<uint32_t>(body.size()));
  out += body;
  return out;
}

std::optional<size_t> frame_size(std::string_view buf) {
  if (buf.size() < 5) return std::nullopt;
  uint32_t len = 0;
  for (int i = 1; i <= 4; ++i)
    len = (len << 8) | static_cast<unsigned char>(buf[i]);
  return 5 + static_cast<size_t>(len);
}

std::optional<Envelope> decode_frame(std::string_view frame,
                                     const NodeId& to_node) {
  ByteReader header(frame);
  auto kind = header.u8();
  auto len = header.u32();
  if (!kind || !len || header.remaining() != *len) return std::nullopt;
  ByteReader r(frame.substr(5));
  auto worker = r.u32();
  if (!worker) return std::nullopt;
  Envelope env;
  env.to = {to_node, static_cast<int32_t>(*worker)};
  std::optional<Message> msg;
  switch (static_cast<WireKind>(*kind)) {
    case WireKind::kRequest: {
      auto m = decode_request(r);
      if (m) msg = std::move(*m);
      break;
    }
    case WireKind::kResponse: {
      auto m = decode_response(r);
      if (m) msg = std::move(*m);
      break;
    }
    case WireKind::kGossip:
      msg = decode_gossip(r);
      break;
    case WireKind::kBroadcast: {
      auto m = decode_broadcast(r);
      if (m) msg = std::move(*m);
      break;
    }
    default:
      return std::nullopt;
  }
  if (!msg || !r.done()) return std::nullopt;
  env.msg = std::move(*msg);
  return env;
}

}  // namespace annakv
