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

#include "mtnoma/power-grid.h"

#include "mtnoma/errors.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtnoma
{

namespace
{

bool
MeetsTarget(double signal, double interferencePlusNoise, double target)
{
    return signal >= target * interferencePlusNoise * (1.0 - kSinrRelTol);
}

} // namespace

std::vector<double>
BuildLevels(int numLevels, double targetSinr, double noisePower, double margin)
{
    if (numLevels < 1)
    {
        throw InvalidParameter("number of levels must be >= 1");
    }
    if (!(targetSinr > 0.0) || !std::isfinite(targetSinr))
    {
        throw InvalidParameter("target SINR must be positive");
    }
    if (!(noisePower > 0.0) || !std::isfinite(noisePower))
    {
        throw InvalidParameter("noise power must be positive");
    }
    if (!(margin >= 1.0) || !std::isfinite(margin))
    {
        throw InvalidParameter("margin must be >= 1");
    }

    std::vector<double> levels;
    levels.reserve(static_cast<std::size_t>(numLevels));
    double below = 0.0;
    for (int i = 0; i < numLevels; ++i)
    {
        const double p = margin * targetSinr * (noisePower + below);
        levels.push_back(p);
        below += p;
    }
    return levels;
}

PowerGrid
MakePowerGrid(int numLevels, int numRbs, double targetSinr, double noisePower, double margin)
{
    if (numRbs < 1)
    {
        throw InvalidParameter("number of resource blocks must be >= 1");
    }
    PowerGrid grid;
    grid.levels = BuildLevels(numLevels, targetSinr, noisePower, margin);
    grid.numLevels = numLevels;
    grid.numRbs = numRbs;
    grid.targetSinr = targetSinr;
    grid.noisePower = noisePower;
    grid.margin = margin;
    return grid;
}

void
ValidatePowerGrid(const PowerGrid& grid)
{
    if (grid.numLevels < 1 || grid.numRbs < 1)
    {
        throw InvalidInput("grid needs N >= 1 and M >= 1");
    }
    if (grid.levels.size() != static_cast<std::size_t>(grid.numLevels))
    {
        throw InvalidInput("grid has " + std::to_string(grid.levels.size()) + " levels, expected " +
                           std::to_string(grid.numLevels));
    }
    if (!(grid.targetSinr > 0.0) || !(grid.noisePower > 0.0) || !(grid.margin >= 1.0))
    {
        throw InvalidInput("grid needs target SINR > 0, noise > 0, margin >= 1");
    }
    double below = 0.0;
    for (int i = 1; i <= grid.numLevels; ++i)
    {
        const double p = grid.Level(i);
        if (i > 1 && !(p > grid.Level(i - 1)))
        {
            throw InvalidInput("levels must be strictly increasing (level " + std::to_string(i) + ")");
        }
        if (!MeetsTarget(p, below + grid.noisePower, grid.targetSinr))
        {
            throw InvalidInput("level " + std::to_string(i) + " cannot be decoded alone at the target SINR");
        }
        below += p;
    }
}

RbOccupancy::RbOccupancy(int numLevels)
    : m_devices(static_cast<std::size_t>(std::max(numLevels, 0)))
{
}

void
RbOccupancy::Add(DeviceId device, int level)
{
    if (level < 1 || level > NumLevels())
    {
        throw InvalidInput("level " + std::to_string(level) + " outside 1.." + std::to_string(NumLevels()));
    }
    m_devices[static_cast<std::size_t>(level - 1)].push_back(device);
    ++m_size;
}

void
RbOccupancy::Clear()
{
    for (auto& d : m_devices)
    {
        d.clear();
    }
    m_size = 0;
}

void
DecodeCollisionLimited(const RbOccupancy& occupancy, DecodeOutcome& out)
{
    out.Clear();
    bool failing = false;
    for (int level = occupancy.NumLevels(); level >= 1; --level)
    {
        const auto& devices = occupancy.Devices(level);
        if (devices.empty())
        {
            continue;
        }
        if (!failing && devices.size() == 1)
        {
            out.succeeded.push_back(devices.front());
            out.decodedLevels.push_back(level);
            continue;
        }
        failing = true;
        out.failed.insert(out.failed.end(), devices.begin(), devices.end());
    }
}

DecodeOutcome
DecodeCollisionLimited(const RbOccupancy& occupancy)
{
    DecodeOutcome out;
    DecodeCollisionLimited(occupancy, out);
    return out;
}

void
DecodeSinr(const RbOccupancy& occupancy,
           const PowerGrid& grid,
           std::span<const double> receivedPowers,
           DecodeOutcome& out)
{
    if (occupancy.NumLevels() != grid.numLevels)
    {
        throw InvalidInput("occupancy has " + std::to_string(occupancy.NumLevels()) + " levels, grid has " +
                           std::to_string(grid.numLevels));
    }
    const bool nominal = receivedPowers.empty();
    auto powerOf = [&](DeviceId id, int level) {
        if (nominal)
        {
            return grid.Level(level);
        }
        if (id >= receivedPowers.size())
        {
            throw InvalidInput("no received power for device " + std::to_string(id));
        }
        const double p = receivedPowers[id];
        if (!(p > 0.0) || !std::isfinite(p))
        {
            throw InvalidInput("received power of device " + std::to_string(id) + " must be positive");
        }
        return p;
    };

    // Uncancelled power still in the RB; decreases as levels are cancelled.
    double remaining = 0.0;
    for (int level = 1; level <= occupancy.NumLevels(); ++level)
    {
        for (DeviceId id : occupancy.Devices(level))
        {
            remaining += powerOf(id, level);
        }
    }

    out.Clear();
    bool failing = false;
    for (int level = occupancy.NumLevels(); level >= 1; --level)
    {
        const auto& devices = occupancy.Devices(level);
        if (devices.empty())
        {
            continue;
        }
        if (!failing && devices.size() == 1)
        {
            const double p = powerOf(devices.front(), level);
            remaining -= p;
            // Clamp rounding residue once everything below is cancelled.
            const double interference = std::max(remaining, 0.0);
            if (MeetsTarget(p, interference + grid.noisePower, grid.targetSinr))
            {
                out.succeeded.push_back(devices.front());
                out.decodedLevels.push_back(level);
                continue;
            }
        }
        failing = true;
        out.failed.insert(out.failed.end(), devices.begin(), devices.end());
    }
}

DecodeOutcome
DecodeSinr(const RbOccupancy& occupancy, const PowerGrid& grid, std::span<const double> receivedPowers)
{
    DecodeOutcome out;
    DecodeSinr(occupancy, grid, receivedPowers, out);
    return out;
}

DecodeOutcome
DecodeSinr(const RbOccupancy& occupancy, const PowerGrid& grid)
{
    return DecodeSinr(occupancy, grid, {});
}

void
DecodeSuccessive(std::span<SicSignal> signals, double noisePower, DecodeOutcome& out)
{
    out.Clear();
    std::stable_sort(signals.begin(), signals.end(), [](const SicSignal& a, const SicSignal& b) {
        return a.rank > b.rank;
    });

    double remaining = 0.0;
    for (const auto& s : signals)
    {
        remaining += s.power;
    }

    bool failing = false;
    std::size_t i = 0;
    while (i < signals.size())
    {
        std::size_t j = i + 1;
        while (j < signals.size() && signals[j].rank == signals[i].rank)
        {
            ++j;
        }
        if (!failing && j == i + 1)
        {
            const SicSignal& s = signals[i];
            remaining -= s.power;
            if (MeetsTarget(s.power, std::max(remaining, 0.0) + noisePower, s.targetSinr))
            {
                out.succeeded.push_back(s.device);
                out.decodedLevels.push_back(s.level);
                i = j;
                continue;
            }
        }
        failing = true;
        for (std::size_t k = i; k < j; ++k)
        {
            out.failed.push_back(signals[k].device);
        }
        i = j;
    }
}

int
CountCollisionLimitedSuccesses(std::span<const int> counts)
{
    int successes = 0;
    for (auto it = counts.rbegin(); it != counts.rend(); ++it)
    {
        if (*it == 1)
        {
            ++successes;
        }
        else if (*it >= 2)
        {
            break;
        }
    }
    return successes;
}

int
CountSinrSuccesses(std::span<const int> counts, const PowerGrid& grid)
{
    double remaining = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i)
    {
        remaining += counts[i] * grid.levels[i];
    }
    int successes = 0;
    for (std::size_t i = counts.size(); i-- > 0;)
    {
        if (counts[i] == 0)
        {
            continue;
        }
        if (counts[i] >= 2)
        {
            break;
        }
        remaining -= grid.levels[i];
        if (!MeetsTarget(grid.levels[i], std::max(remaining, 0.0) + grid.noisePower, grid.targetSinr))
        {
            break;
        }
        ++successes;
    }
    return successes;
}

} // namespace mtnoma
