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

#ifndef MTNOMA_POWER_MAP_H
#define MTNOMA_POWER_MAP_H

#include "mtnoma/power-grid.h"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mtnoma
{

struct Point
{
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

/// An obstacle: a simple polygon that multiplies the gain of every link
/// crossing it by `attenuation` (linear, in (0, 1]).
struct Blockage
{
    std::vector<Point> polygon;
    double attenuation = 1.0;

    friend bool operator==(const Blockage&, const Blockage&) = default;
};

/**
 * Log-distance path loss with blockages and a piecewise-constant antenna
 * pattern at the base station. sectorGains splits the azimuth circle into
 * equal sectors counter-clockwise from +x; an empty list means an
 * omnidirectional unit-gain antenna.
 */
struct ChannelModel
{
    double refDistance = 1.0;
    double refGain = 1.0;
    double pathLossExponent = 2.0;
    std::vector<Blockage> blockages;
    std::vector<double> sectorGains;
    /// Log-normal spread of the instantaneous gain around the mean; only the
    /// simulation engine draws from it.
    double shadowingSigmaDb = 0.0;

    double AntennaGain(double azimuthRad) const;

    friend bool operator==(const ChannelModel&, const ChannelModel&) = default;
};

void ValidateChannelModel(const ChannelModel& model);

struct RectangleArea
{
    Point min;
    Point max;

    friend bool operator==(const RectangleArea&, const RectangleArea&) = default;
};

struct DiskArea
{
    Point center;
    double radius = 0.0;

    friend bool operator==(const DiskArea&, const DiskArea&) = default;
};

using Area = std::variant<RectangleArea, DiskArea>;

struct Region
{
    int id = 0;
    Point center;
    double width = 0.0;
    double height = 0.0;
    /// Linear gain at the cell center; zero until AssignMeanGains runs.
    double meanGain = 0.0;

    friend bool operator==(const Region&, const Region&) = default;
};

/// Row-major grid cells over the area's bounding box. For a disk only cells
/// whose center lies inside the disk are kept. Ids are consecutive from 0.
std::vector<Region> PartitionArea(const Area& area, int rows, int cols);

/// Gain from the base station to the region center. Throws InvalidParameter
/// when the center coincides with the base station.
double MeanGain(const Region& region, const ChannelModel& model, Point bs);
void AssignMeanGains(std::vector<Region>& regions, const ChannelModel& model, Point bs);

struct PoolEntry
{
    int level = 1;
    double tpl = 0.0;

    friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

struct PowerPool
{
    int regionId = 0;
    /// Sorted by level.
    std::vector<PoolEntry> entries;

    bool Void() const
    {
        return entries.empty();
    }

    bool HasLevel(int level) const;
    const PoolEntry* Find(int level) const;
    double AverageTpl() const;

    friend bool operator==(const PowerPool&, const PowerPool&) = default;
};

struct PowerMap
{
    PowerGrid grid;
    ChannelModel channel;
    Point bsLocation;
    double maxTpl = 0.0;
    std::vector<Region> regions;
    /// pools[i] belongs to regions[i].
    std::vector<PowerPool> pools;

    const PowerPool& PoolOf(int regionId) const;
    const Region& RegionOf(int regionId) const;
};

bool operator==(const PowerMap& a, const PowerMap& b);

/// For every region and level the candidate TPL is P_level / meanGain;
/// candidates above maxTpl are dropped, possibly leaving a void pool.
PowerMap BuildPowerMap(const std::vector<Region>& regions,
                       const PowerGrid& grid,
                       const ChannelModel& model,
                       double maxTpl,
                       Point bs = {});

/// Throws InvalidInput when the map's pools do not match its grid/regions.
void ValidatePowerMap(const PowerMap& map);

/// FNV-1a over the canonical JSON of the channel model, as 16 hex digits.
std::string ChannelModelHash(const ChannelModel& model);

nlohmann::json ToJson(const ChannelModel& model);
ChannelModel ChannelModelFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const PowerGrid& grid);
PowerGrid PowerGridFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const PowerMap& map);
PowerMap PowerMapFromJson(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Multi-agent tabular Q-learning refinement.

/// One PD-RB choice made by one agent.
struct AgentAction
{
    int level = 1;
    int rb = 0;
    double tpl = 0.0;
};

struct StepFeedback
{
    /// Linear decode SINR per agent (0 when the agent could not be decoded).
    std::vector<double> sinr;
    /// Total transmit power spent in the step, successful or not.
    double consumption = 0.0;
};

/// Evaluates a joint action; actions[k] belongs to the k-th participating
/// agent (regions with non-void pools, in region order).
using SimHook = std::function<StepFeedback(std::span<const AgentAction> actions)>;

struct QLearningOptions
{
    int episodes = 200;
    int stepsPerEpisode = 50;
    double learningRate = 0.1;
    double discount = 0.9;
    double exploration = 0.1;
    int sinrBins = 8;
    double sinrMinDb = -10.0;
    double sinrMaxDb = 30.0;
    /// Training stops after an episode whose largest |Q update| is at most
    /// this fraction of the largest |Q|.
    double tolerance = 1e-4;
    std::uint64_t seed = 1;
};

struct QLearningResult
{
    PowerMap map;
    int episodesRun = 0;
    bool converged = false;
    /// Per participating agent, row-major [state][action]; actions are the
    /// agent's (pool entry, rb) pairs ordered by TPL, then RB.
    std::vector<std::vector<double>> qTables;
};

/// Quantizes a linear SINR into [0, bins) over [minDb, maxDb]; non-positive
/// SINR maps to bin 0.
int QuantizeSinr(double sinr, int bins, double minDb, double maxDb);

QLearningResult RefinePowerMapQLearning(const PowerMap& initial, const SimHook& hook, const QLearningOptions& options);

/// Environment in which every agent lands exactly on its target level and
/// each RB is decoded by SIC; SINR is reported at each agent's decode stage.
SimHook MakeSicHook(const PowerMap& map);

} // namespace mtnoma

#endif // MTNOMA_POWER_MAP_H
