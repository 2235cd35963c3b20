// Copyright 2026 The MoECache Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOECACHE_RNG_H_
#define MOECACHE_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace moecache {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a key tuple, so
// that results never depend on the order in which streams are consumed.
inline std::uint64_t DeriveSeed(std::uint64_t base,
                                std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = SplitMix64(base);
  for (std::uint64_t k : keys) h = SplitMix64(h ^ SplitMix64(k + 0x51ed27ULL));
  return h;
}

using Rng = std::mt19937_64;

}  // namespace moecache

#endif  // MOECACHE_RNG_H_
