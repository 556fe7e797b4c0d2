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

#ifndef MTNOMA_POWER_GRID_H
#define MTNOMA_POWER_GRID_H

#include <cstdint>
#include <span>
#include <vector>

namespace mtnoma
{

using DeviceId = std::uint32_t;

/// Relative slack applied to every SINR >= target comparison so that levels
/// built with margin 1 decode exactly at the target despite rounding.
inline constexpr double kSinrRelTol = 1e-9;

/**
 * The PD-RB structure: M orthogonal resource blocks, each split into N
 * received power levels. Levels are numbered 1..N from weakest to strongest;
 * levels[i - 1] holds the linear power of level i.
 */
struct PowerGrid
{
    int numLevels = 0;
    int numRbs = 0;
    std::vector<double> levels;
    double targetSinr = 1.0;
    double noisePower = 1.0;
    double margin = 1.0;

    double Level(int level) const
    {
        return levels[static_cast<std::size_t>(level - 1)];
    }

    int NumPdRbs() const
    {
        return numLevels * numRbs;
    }
};

/// P_1 = margin * sinr * noise; P_i = margin * sinr * (noise + sum_{j<i} P_j).
/// Throws InvalidParameter for numLevels < 1, sinr <= 0, noise <= 0 or margin < 1.
std::vector<double> BuildLevels(int numLevels, double targetSinr, double noisePower, double margin = 1.0);

PowerGrid MakePowerGrid(int numLevels, int numRbs, double targetSinr, double noisePower, double margin = 1.0);

/// Checks the grid invariants (strictly increasing levels, single-occupancy
/// SIC feasibility). Throws InvalidInput naming the first violation.
void ValidatePowerGrid(const PowerGrid& grid);

/// Devices that picked each level of one RB in one slot.
class RbOccupancy
{
  public:
    explicit RbOccupancy(int numLevels = 0);

    /// level is 1-based. Throws InvalidInput when out of range.
    void Add(DeviceId device, int level);
    void Clear();

    int NumLevels() const
    {
        return static_cast<int>(m_devices.size());
    }

    int Count(int level) const
    {
        return static_cast<int>(m_devices[static_cast<std::size_t>(level - 1)].size());
    }

    const std::vector<DeviceId>& Devices(int level) const
    {
        return m_devices[static_cast<std::size_t>(level - 1)];
    }

    std::size_t Size() const
    {
        return m_size;
    }

    bool Empty() const
    {
        return m_size == 0;
    }

  private:
    std::vector<std::vector<DeviceId>> m_devices;
    std::size_t m_size = 0;
};

struct DecodeOutcome
{
    std::vector<DeviceId> succeeded;
    std::vector<DeviceId> failed;
    /// Levels decoded, in SIC order (strictly decreasing).
    std::vector<int> decodedLevels;

    void Clear()
    {
        succeeded.clear();
        failed.clear();
        decodedLevels.clear();
    }
};

/**
 * Collision-limited SIC: levels are scanned from N down to 1; singleton
 * levels decode until the first level holding two or more devices, which
 * fails together with every level below it.
 */
DecodeOutcome DecodeCollisionLimited(const RbOccupancy& occupancy);
void DecodeCollisionLimited(const RbOccupancy& occupancy, DecodeOutcome& out);

/**
 * SINR-explicit SIC. At a singleton level the device decodes when its
 * received power is at least targetSinr times (remaining uncancelled power +
 * noise); a collided level or an SINR miss fails that level and everything
 * below it.
 *
 * receivedPowers is indexed by DeviceId. The overload without it uses the
 * nominal level powers.
 */
DecodeOutcome DecodeSinr(const RbOccupancy& occupancy, const PowerGrid& grid);
DecodeOutcome DecodeSinr(const RbOccupancy& occupancy, const PowerGrid& grid, std::span<const double> receivedPowers);
void DecodeSinr(const RbOccupancy& occupancy,
                const PowerGrid& grid,
                std::span<const double> receivedPowers,
                DecodeOutcome& out);

/// One signal entering a generic SIC receiver. Signals with equal rank share
/// a PD-RB and therefore collide; decoding proceeds in decreasing rank.
struct SicSignal
{
    DeviceId device = 0;
    int level = 0; ///< reported in decodedLevels; 0 for signals outside the grid
    double rank = 0.0;
    double power = 0.0;
    double targetSinr = 1.0;
};

/// Decodes an arbitrary signal set (sorted in place). Used when a signal sits
/// between grid levels, e.g. a grant-based device sharing its RB.
void DecodeSuccessive(std::span<SicSignal> signals, double noisePower, DecodeOutcome& out);

/// Allocation-free success counts from per-level counts (index 0 = level 1),
/// with nominal received powers for the SINR variant.
int CountCollisionLimitedSuccesses(std::span<const int> counts);
int CountSinrSuccesses(std::span<const int> counts, const PowerGrid& grid);

} // namespace mtnoma

#endif // MTNOMA_POWER_GRID_H
