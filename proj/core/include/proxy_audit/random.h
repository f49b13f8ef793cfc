// Copyright 2026 The Proxy Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROXY_AUDIT_RANDOM_H_
#define PROXY_AUDIT_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>

namespace proxy_audit {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
inline uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for substream `stream` of `seed`.
inline Rng Substream(uint64_t seed, uint64_t stream) {
  return Rng(Mix64(seed ^ Mix64(stream + 0x632be59bd9b4e019ULL)));
}

// Uniform integer in [0, n), n >= 1. Unlike the standard distributions the
// mapping from engine output is fixed, so sequences are identical across
// standard libraries.
inline uint64_t UniformIndex(Rng& rng, uint64_t n) {
  // Lemire's multiply-shift with rejection.
  __uint128_t m = static_cast<__uint128_t>(rng()) * n;
  uint64_t low = static_cast<uint64_t>(m);
  if (low < n) {
    const uint64_t threshold = -n % n;
    while (low < threshold) {
      m = static_cast<__uint128_t>(rng()) * n;
      low = static_cast<uint64_t>(m);
    }
  }
  return static_cast<uint64_t>(m >> 64);
}

template <typename T>
void Shuffle(std::span<T> values, Rng& rng) {
  for (size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[UniformIndex(rng, i)]);
  }
}

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_RANDOM_H_
