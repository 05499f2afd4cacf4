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

#include "annakv/store.hpp"

#include <fstream>

#include "annakv/bytes.hpp"

namespace annakv {

namespace {
uint64_t cell_footprint(const std::string& key, const LwwCell& cell) {
  return key.size() + cell.payload.size() + 20;  // stamp + length framing
}
}  // namespace

std::optional<LwwCell> MemStore::get(const std::string& key) {
  auto it = cells_.find(key);
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

bool MemStore::put(const std::string& key, const LwwCell& cell) {
  auto it = cells_.find(key);
  if (it == cells_.end()) {
    bytes_ += cell_footprint(key, cell);
    cells_.emplace(key, cell);
    ++mutations_;
    return true;
  }
  if (dominates(it->second, cell)) return false;
  bytes_ -= cell_footprint(key, it->second);
  bytes_ += cell_footprint(key, cell);
  it->second = cell;
  ++mutations_;
  return true;
}

void MemStore::erase(const std::string& key) {
  auto it = cells_.find(key);
  if (it == cells_.end()) return;
  bytes_ -= cell_footprint(key, it->second);
  cells_.erase(it);
  ++mutations_;
}

bool MemStore::contains(const std::string& key) const {
  return cells_.count(key) > 0;
}

std::optional<Timestamp> MemStore::stamp_of(const std::string& key) const {
  auto it = cells_.find(key);
  if (it == cells_.end()) return std::nullopt;
  return it->second.ts;
}

std::vector<std::string> MemStore::keys() const {
  std::vector<std::string> out;
  out.reserve(cells_.size());
  for (const auto& [key, _] : cells_) out.push_back(key);
  return out;
}

EbsStore::EbsStore(std::filesystem::path root, const std::string& node_id,
                   uint32_t worker_index)
    : dir_(root / node_id / std::to_string(worker_index)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path EbsStore::file_for(const std::string& key) const {
  return dir_ / url_encode(key);
}

std::optional<LwwCell> EbsStore::get(const std::string& key) {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  std::ifstream in(file_for(key), std::ios::binary);
  if (!in) {
    ++integrity_faults_;
    return std::nullopt;
  }
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  auto cell = decode_cell(buf);
  if (!cell) {
    ++integrity_faults_;
    return std::nullopt;
  }
  return cell;
}

bool EbsStore::put(const std::string& key, const LwwCell& cell) {
  auto it = index_.find(key);
  if (it != index_.end() && it->second.ts >= cell.ts) return false;

  // Write-then-rename keeps loads from ever seeing a half-written file.
  auto path = file_for(key);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    std::string bytes = encode_cell(cell);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) return false;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) return false;

  uint64_t footprint = cell_footprint(key, cell);
  if (it != index_.end()) {
    bytes_ -= it->second.bytes;
    it->second = {cell.ts, footprint};
  } else {
    index_.emplace(key, Entry{cell.ts, footprint});
  }
  bytes_ += footprint;
  ++mutations_;
  return true;
}

void EbsStore::erase(const std::string& key) {
  auto it = index_.find(key);
  if (it == index_.end()) return;
  bytes_ -= it->second.bytes;
  index_.erase(it);
  ++mutations_;
  std::error_code ec;
  std::filesystem::remove(file_for(key), ec);
}

bool EbsStore::contains(const std::string& key) const {
  return index_.count(key) > 0;
}

std::optional<Timestamp> EbsStore::stamp_of(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second.ts;
}

std::vector<std::string> EbsStore::keys() const {
  std::vector<std::string> out;
  out.reserve(index_.size());
  for (const auto& [key, _] : index_) out.push_back(key);
  return out;
}

std::unique_ptr<TierStore> make_store(Tier tier,
                                      const std::filesystem::path& data_root,
                                      const std::string& node_id,
                                      uint32_t worker_index) {
  if (tier == Tier::kMem) return std::make_unique<MemStore>();
  return std::make_unique<EbsStore>(data_root, node_id, worker_index);
}

}  // namespace annakv
