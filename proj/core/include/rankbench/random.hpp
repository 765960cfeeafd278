/*
 * Copyright 2026 The rankbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <type_traits>

namespace rankbench {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {
constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}
constexpr std::uint64_t part_hash(std::string_view s) { return fnv1a64(s); }
constexpr std::uint64_t part_hash(const char* s) {
  return fnv1a64(std::string_view(s));
}
template <class T>
constexpr std::uint64_t part_hash(const T& v)
  requires std::is_integral_v<T>
{
  return static_cast<std::uint64_t>(v);
}
}  // namespace detail

// Independent stream seed for (seed, parts...). Streams depend only on their
// key, never on scheduling, so results are identical for any thread count.
template <class... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t seed, const Parts&... parts) {
  std::uint64_t h = mix64(seed);
  ((h = detail::combine(h, detail::part_hash(parts))), ...);
  return h;
}

template <class... Parts>
Rng make_rng(std::uint64_t seed, const Parts&... parts) {
  return Rng(derive_seed(seed, parts...));
}

}  // namespace rankbench
