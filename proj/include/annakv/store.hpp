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

#ifndef INCLUDE_ANNAKV_STORE_HPP_
#define INCLUDE_ANNAKV_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "annakv/lattice.hpp"
#include "annakv/tiers.hpp"

namespace annakv {

// A worker's private storage medium. The only difference between tiers is
// the serde: the memory tier keeps cells in a map, the disk tier writes one
// file per key in the canonical cell encoding.
class TierStore {
 public:
  virtual ~TierStore() = default;

  virtual std::optional<LwwCell> get(const std::string& key) = 0;

  // Merges the cell in; returns true when the stored value changed.
  virtual bool put(const std::string& key, const LwwCell& cell) = 0;

  virtual void erase(const std::string& key) = 0;
  virtual bool contains(const std::string& key) const = 0;
  virtual std::optional<Timestamp> stamp_of(const std::string& key) const = 0;
  virtual std::vector<std::string> keys() const = 0;
  virtual size_t size() const = 0;
  virtual uint64_t bytes_used() const = 0;

  // Corrupted loads surface as missing keys plus a fault count, never a
  // crash.
  virtual uint64_t integrity_faults() const { return 0; }

  // State-change counter; lets tests prove no one mutates a store from
  // outside its owning worker's execution.
  virtual uint64_t mutations() const = 0;
};

class MemStore : public TierStore {
 public:
  std::optional<LwwCell> get(const std::string& key) override;
  bool put(const std::string& key, const LwwCell& cell) override;
  void erase(const std::string& key) override;
  bool contains(const std::string& key) const override;
  std::optional<Timestamp> stamp_of(const std::string& key) const override;
  std::vector<std::string> keys() const override;
  size_t size() const override { return cells_.size(); }
  uint64_t bytes_used() const override { return bytes_; }
  uint64_t mutations() const override { return mutations_; }

 private:
  std::map<std::string, LwwCell> cells_;
  uint64_t bytes_ = 0;
  uint64_t mutations_ = 0;
};

// File-per-key layout under <root>/<node_id>/<worker_index>/<urlencoded
// key>. An in-memory stamp index spares dominance checks the file read;
// payloads always come off disk.
class EbsStore : public TierStore {
 public:
  EbsStore(std::filesystem::path root, const std::string& node_id,
           uint32_t worker_index);

  std::optional<LwwCell> get(const std::string& key) override;
  bool put(const std::string& key, const LwwCell& cell) override;
  void erase(const std::string& key) override;
  bool contains(const std::string& key) const override;
  std::optional<Timestamp> stamp_of(const std::string& key) const override;
  std::vector<std::string> keys() const override;
  size_t size() const override { return index_.size(); }
  uint64_t bytes_used() const override { return bytes_; }
  uint64_t integrity_faults() const override { return integrity_faults_; }
  uint64_t mutations() const override { return mutations_; }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path file_for(const std::string& key) const;

  struct Entry {
    Timestamp ts;
    uint64_t bytes;
  };

  std::filesystem::path dir_;
  std::map<std::string, Entry> index_;
  uint64_t bytes_ = 0;
  uint64_t integrity_faults_ = 0;
  uint64_t mutations_ = 0;
};

std::unique_ptr<TierStore> make_store(Tier tier,
                                      const std::filesystem::path& data_root,
                                      const std::string& node_id,
                                      uint32_t worker_index);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_STORE_HPP_
