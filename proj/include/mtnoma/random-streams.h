/*
 * Copyright 2026 The mtnoma Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MTNOMA_RANDOM_STREAMS_H
#define MTNOMA_RANDOM_STREAMS_H

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mtnoma
{

using Engine = std::mt19937_64;

// Streams are keyed by a structure path, e.g. {"sim", "select"} or
// {"mc", chunkIndex}. Each path component is folded into the run seed with a
// SplitMix64 finalizer, so introducing a new stream never shifts the draws of
// an existing one.

constexpr std::uint64_t
MixBits(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t
HashLabel(std::string_view label)
{
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label)
    {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

class StreamKey
{
  public:
    explicit constexpr StreamKey(std::uint64_t seed)
        : m_state(MixBits(seed))
    {
    }

    constexpr StreamKey Child(std::string_view label) const
    {
        return StreamKey(m_state, HashLabel(label));
    }

    constexpr StreamKey Child(std::uint64_t index) const
    {
        return StreamKey(m_state, MixBits(index ^ 0x5851f42d4c957f2dULL));
    }

    constexpr std::uint64_t Value() const
    {
        return m_state;
    }

    Engine MakeEngine() const
    {
        return Engine(m_state);
    }

  private:
    constexpr StreamKey(std::uint64_t parent, std::uint64_t component)
        : m_state(MixBits(parent ^ MixBits(component)))
    {
    }

    std::uint64_t m_state;
};

/// Uniform double in [0, 1) with 53 random bits; identical across standard
/// library implementations (unlike std::uniform_real_distribution).
inline double
UniformUnit(Engine& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) by Lemire's multiply-shift (bias below
/// 2^-64 * bound, negligible for the bounds used here).
__extension__ using Uint128 = unsigned __int128;

inline std::uint64_t
UniformIndex(Engine& rng, std::uint64_t bound)
{
    return static_cast<std::uint64_t>((static_cast<Uint128>(rng()) * bound) >> 64);
}

} // namespace mtnoma

#endif // MTNOMA_RANDOM_STREAMS_H
