// Copyright 2026 The scenegen Authors
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

#ifndef SCENEGEN_RNG_HPP_
#define SCENEGEN_RNG_HPP_

#include <cstdint>
#include <random>

namespace scenegen {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates neighbouring integer keys
inline uint64_t mix_seed(uint64_t key) {
  uint64_t z = key + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(uint64_t key) { return Rng(mix_seed(key)); }

// Seed domains. Generation attempts and evaluation rollouts never share a
// key as long as indices stay below 2^32.
inline constexpr uint64_t kEvalDomain = uint64_t{1} << 32;

inline uint64_t generation_seed(uint64_t master_seed, uint64_t episode_index) {
  return master_seed ^ episode_index;
}

inline uint64_t eval_seed(uint64_t master_seed, uint64_t rollout_index) {
  return master_seed ^ kEvalDomain ^ rollout_index;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace scenegen

#endif  // SCENEGEN_RNG_HPP_
