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

#ifndef MTNOMA_AAR_ANALYTICS_H
#define MTNOMA_AAR_ANALYTICS_H

#include "mtnoma/power-grid.h"

#include <cstdint>
#include <string_view>
#include <vector>

namespace mtnoma
{

enum class DecodeMode
{
    CollisionLimited,
    Sinr,
};

std::string_view ToString(DecodeMode mode);
/// Accepts "collision_limited" and "sinr"; throws InvalidParameter otherwise.
DecodeMode ParseDecodeMode(std::string_view text);

/// A power-domain resource block: level is 1-based, rb is 0-based.
struct PdRb
{
    int level = 1;
    int rb = 0;

    friend bool operator==(const PdRb&, const PdRb&) = default;
};

struct SelectionModel
{
    enum class Kind
    {
        UniformOverPdRbs,
        PoolRestricted,
    };

    Kind kind = Kind::UniformOverPdRbs;
    /// PoolRestricted only: allowed PD-RBs per contending device.
    std::vector<std::vector<PdRb>> allowed;

    static SelectionModel Uniform()
    {
        return {};
    }

    static SelectionModel Restricted(std::vector<std::vector<PdRb>> allowed)
    {
        return {Kind::PoolRestricted, std::move(allowed)};
    }
};

struct AarResult
{
    double expectedSuccessesPerSlot = 0.0;
    double perRb = 0.0;
    double stdError = 0.0;
    std::uint64_t trials = 0;
};

inline constexpr std::uint64_t kDefaultEnumerationBudget = 50'000'000;

/**
 * Exact expected successes per slot over independent selections.
 *
 * Uniform selection factors over RBs: the occupancy of one RB is
 * Binomial(n, 1/M) and its devices spread uniformly over the N levels, so only
 * per-level count vectors are enumerated. Pool-restricted selection
 * enumerates labelled assignments. Either way the work is checked against
 * `budget` first and TooLarge is thrown when it would be exceeded.
 *
 * SINR mode uses nominal received powers.
 */
AarResult ExactAar(int n,
                   const PowerGrid& grid,
                   const SelectionModel& selection,
                   DecodeMode mode,
                   std::uint64_t budget = kDefaultEnumerationBudget);

/// Monte Carlo estimate. Trials are split into fixed-size chunks with their
/// own seed-derived streams, so the result is identical for any worker count.
AarResult McAar(int n,
                const PowerGrid& grid,
                const SelectionModel& selection,
                DecodeMode mode,
                std::uint64_t trials,
                std::uint64_t seed,
                int workers = 1);

struct OptimalLoadResult
{
    int optimalLoad = 1;
    double maxAar = 0.0;
    /// False when some candidate beyond the enumeration budget was estimated
    /// by Monte Carlo.
    bool exact = true;
};

struct OptimalLoadOptions
{
    std::uint64_t budget = kDefaultEnumerationBudget;
    std::uint64_t mcTrials = 200'000;
    std::uint64_t seed = 1;
    /// A Monte Carlo candidate replaces the incumbent only when it is ahead by
    /// more than this many combined standard errors.
    double confidenceZ = 2.0;
};

/// argmax over n in [1, nMax] of the uniform-selection AAR; ties go to the
/// smaller n.
OptimalLoadResult OptimalLoad(const PowerGrid& grid, DecodeMode mode, int nMax, const OptimalLoadOptions& options = {});

} // namespace mtnoma

#endif // MTNOMA_AAR_ANALYTICS_H
