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

#ifndef INCLUDE_ANNAKV_BYTES_HPP_
#define INCLUDE_ANNAKV_BYTES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace annakv {

// All multi-byte integers on the wire and on disk are big-endian.

inline void put_u64(std::string& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<char>((v >> shift) & 0xff));
}

inline void put_u32(std::string& out, uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8)
    out.push_back(static_cast<char>((v >> shift) & 0xff));
}

inline void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

inline void put_u8(std::string& out, uint8_t v) {
  out.push_back(static_cast<char>(v));
}

// Cursor over an immutable byte buffer. Reads return nullopt past the end
// instead of throwing; decoders turn that into a parse failure.
class ByteReader {
 public:
  explicit ByteReader(std::string_view buf) : buf_(buf) {}

  std::optional<uint64_t> u64() { return read_uint(8); }
  std::optional<uint32_t> u32() {
    auto v = read_uint(4);
    if (!v) return std::nullopt;
    return static_cast<uint32_t>(*v);
  }
  std::optional<uint16_t> u16() {
    auto v = read_uint(2);
    if (!v) return std::nullopt;
    return static_cast<uint16_t>(*v);
  }
  std::optional<uint8_t> u8() {
    auto v = read_uint(1);
    if (!v) return std::nullopt;
    return static_cast<uint8_t>(*v);
  }

  std::optional<std::string_view> bytes(size_t n) {
    if (buf_.size() - pos_ < n) return std::nullopt;
    std::string_view out = buf_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == buf_.size(); }
  size_t remaining() const { return buf_.size() - pos_; }

 private:
  std::optional<uint64_t> read_uint(size_t n) {
    if (buf_.size() - pos_ < n) return std::nullopt;
    uint64_t v = 0;
    for (size_t i = 0; i < n; ++i)
      v = (v << 8) | static_cast<unsigned char>(buf_[pos_ + i]);
    pos_ += n;
    return v;
  }

  std::string_view buf_;
  size_t pos_ = 0;
};

// Length-prefixed strings: u16 for keys and identifiers, u32 for payloads.
inline void put_str16(std::string& out, std::string_view s) {
  put_u16(out, static_cast<uint16_t>(s.size()));
  out.append(s);
}

inline void put_str32(std::string& out, std::string_view s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

inline std::optional<std::string> get_str16(ByteReader& r) {
  auto n = r.u16();
  if (!n) return std::nullopt;
  auto b = r.bytes(*n);
  if (!b) return std::nullopt;
  return std::string(*b);
}

inline std::optional<std::string> get_str32(ByteReader& r) {
  auto n = r.u32();
  if (!n) return std::nullopt;
  auto b = r.bytes(*n);
  if (!b) return std::nullopt;
  return std::string(*b);
}

// Percent-encoding for keys used as file names (disk-tier layout).
std::string url_encode(std::string_view s);
std::optional<std::string> url_decode(std::string_view s);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_BYTES_HPP_
