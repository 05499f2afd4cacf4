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

#ifndef INCLUDE_ANNAKV_HASH_HPP_
#define INCLUDE_ANNAKV_HASH_HPP_

#include <cstdint>
#include <string_view>

namespace annakv {

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Position function for hash rings. FNV-1a alone clusters badly for short,
// similar member strings; the splitmix finalizer restores avalanche.
inline uint64_t ring_hash64(std::string_view s) {
  return splitmix64(fnv1a64(s));
}

using HashFn = uint64_t (*)(std::string_view);

}  // namespace annakv

#endif  // INCLUDE_ANNAKV_HASH_HPP_
