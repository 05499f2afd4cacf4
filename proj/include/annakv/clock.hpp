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

#ifndef INCLUDE_ANNAKV_CLOCK_HPP_
#define INCLUDE_ANNAKV_CLOCK_HPP_

#include <chrono>
#include <cstdint>

namespace annakv {

// Clocks are always injected; nothing in the system reads wall time directly.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual uint64_t now_ms() const = 0;
};

class ManualClock : public Clock {
 public:
  explicit ManualClock(uint64_t start_ms = 0) : now_(start_ms) {}
  uint64_t now_ms() const override { return now_; }
  void advance(uint64_t ms) { now_ += ms; }
  void set(uint64_t ms) { now_ = ms; }

 private:
  uint64_t now_;
};

class SystemClock : public Clock {
 public:
  uint64_t now_ms() const override {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now().time_since_epoch())
            .count());
  }
};

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_CLOCK_HPP_
