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

#include "mtnoma/power-map.h"

#include "mtnoma/errors.h"
#include "mtnoma/random-streams.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/segment.hpp>

namespace mtnoma
{

namespace bg = boost::geometry;

namespace
{

using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;
using BgSegment = bg::model::segment<BgPoint>;

BgPolygon
ToPolygon(const std::vector<Point>& vertices)
{
    BgPolygon poly;
    for (const auto& p : vertices)
    {
        bg::append(poly.outer(), BgPoint(p.x, p.y));
    }
    bg::correct(poly);
    return poly;
}

bool
SameGrid(const PowerGrid& a, const PowerGrid& b)
{
    return a.numLevels == b.numLevels && a.numRbs == b.numRbs && a.levels == b.levels &&
           a.targetSinr == b.targetSinr && a.noisePower == b.noisePower && a.margin == b.margin;
}

nlohmann::json
PointToJson(Point p)
{
    return nlohmann::json::array({p.x, p.y});
}

Point
PointFromJson(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != 2)
    {
        throw InvalidInput("point must be a two-element array");
    }
    return Point{j[0].get<double>(), j[1].get<double>()};
}

} // namespace

double
ChannelModel::AntennaGain(double azimuthRad) const
{
    if (sectorGains.empty())
    {
        return 1.0;
    }
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    double a = std::fmod(azimuthRad, kTwoPi);
    if (a < 0.0)
    {
        a += kTwoPi;
    }
    auto k = static_cast<std::size_t>(a / (kTwoPi / static_cast<double>(sectorGains.size())));
    return sectorGains[std::min(k, sectorGains.size() - 1)];
}

void
ValidateChannelModel(const ChannelModel& model)
{
    if (!(model.refDistance > 0.0))
    {
        throw InvalidParameter("channel model: ref_distance must be > 0");
    }
    if (!(model.refGain > 0.0))
    {
        throw InvalidParameter("channel model: ref_gain must be > 0");
    }
    if (!(model.pathLossExponent > 0.0))
    {
        throw InvalidParameter("channel model: path_loss_exponent must be > 0");
    }
    for (const auto& b : model.blockages)
    {
        if (!(b.attenuation > 0.0 && b.attenuation <= 1.0))
        {
            throw InvalidParameter("channel model: blockage attenuation must lie in (0, 1]");
        }
        if (b.polygon.size() < 3)
        {
            throw InvalidParameter("channel model: blockage polygon needs at least 3 vertices");
        }
    }
    for (double g : model.sectorGains)
    {
        if (!(g > 0.0))
        {
            throw InvalidParameter("channel model: sector gains must be > 0");
        }
    }
    if (!(model.shadowingSigmaDb >= 0.0))
    {
        throw InvalidParameter("channel model: shadowing_sigma_db must be >= 0");
    }
}

std::vector<Region>
PartitionArea(const Area& area, int rows, int cols)
{
    if (rows < 1 || cols < 1)
    {
        throw InvalidParameter("partition: grid dimensions must be >= 1");
    }
    Point lo;
    Point hi;
    const DiskArea* disk = std::get_if<DiskArea>(&area);
    if (disk)
    {
        if (!(disk->radius > 0.0))
        {
            throw InvalidParameter("partition: disk radius must be > 0");
        }
        lo = {disk->center.x - disk->radius, disk->center.y - disk->radius};
        hi = {disk->center.x + disk->radius, disk->center.y + disk->radius};
    }
    else
    {
        const auto& rect = std::get<RectangleArea>(area);
        lo = rect.min;
        hi = rect.max;
        if (!(hi.x > lo.x && hi.y > lo.y))
        {
            throw InvalidParameter("partition: rectangle has zero or negative extent");
        }
    }

    double w = (hi.x - lo.x) / cols;
    double h = (hi.y - lo.y) / rows;
    std::vector<Region> regions;
    for (int r = 0; r < rows; ++r)
    {
        for (int c = 0; c < cols; ++c)
        {
            Point center{lo.x + (c + 0.5) * w, lo.y + (r + 0.5) * h};
            if (disk && std::hypot(center.x - disk->center.x, center.y - disk->center.y) > disk->radius)
            {
                continue;
            }
            regions.push_back(Region{static_cast<int>(regions.size()), center, w, h, 0.0});
        }
    }
    if (regions.empty())
    {
        throw InvalidParameter("partition: no cell center falls inside the area");
    }
    return regions;
}

double
MeanGain(const Region& region, const ChannelModel& model, Point bs)
{
    ValidateChannelModel(model);
    double dx = region.center.x - bs.x;
    double dy = region.center.y - bs.y;
    double d = std::hypot(dx, dy);
    if (d == 0.0)
    {
        throw InvalidParameter("mean gain: region center coincides with the base station");
    }
    double gain = model.refGain * std::pow(d / model.refDistance, -model.pathLossExponent);
    gain *= model.AntennaGain(std::atan2(dy, dx));

    BgSegment link(BgPoint(bs.x, bs.y), BgPoint(region.center.x, region.center.y));
    for (const auto& b : model.blockages)
    {
        if (bg::intersects(link, ToPolygon(b.polygon)))
        {
            gain *= b.attenuation;
        }
    }
    return gain;
}

void
AssignMeanGains(std::vector<Region>& regions, const ChannelModel& model, Point bs)
{
    for (auto& r : regions)
    {
        r.meanGain = MeanGain(r, model, bs);
    }
}

bool
PowerPool::HasLevel(int level) const
{
    return Find(level) != nullptr;
}

const PoolEntry*
PowerPool::Find(int level) const
{
    for (const auto& e : entries)
    {
        if (e.level == level)
        {
            return &e;
        }
    }
    return nullptr;
}

double
PowerPool::AverageTpl() const
{
    if (entries.empty())
    {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& e : entries)
    {
        sum += e.tpl;
    }
    return sum / static_cast<double>(entries.size());
}

const PowerPool&
PowerMap::PoolOf(int regionId) const
{
    for (const auto& p : pools)
    {
        if (p.regionId == regionId)
        {
            return p;
        }
    }
    throw InvalidInput("power map has no pool for region " + std::to_string(regionId));
}

const Region&
PowerMap::RegionOf(int regionId) const
{
    for (const auto& r : regions)
    {
        if (r.id == regionId)
        {
            return r;
        }
    }
    throw InvalidInput("power map has no region " + std::to_string(regionId));
}

bool
operator==(const PowerMap& a, const PowerMap& b)
{
    return SameGrid(a.grid, b.grid) && a.channel == b.channel && a.bsLocation == b.bsLocation &&
           a.maxTpl == b.maxTpl && a.regions == b.regions && a.pools == b.pools;
}

PowerMap
BuildPowerMap(const std::vector<Region>& regions,
              const PowerGrid& grid,
              const ChannelModel& model,
              double maxTpl,
              Point bs)
{
    ValidatePowerGrid(grid);
    ValidateChannelModel(model);
    if (!(maxTpl > 0.0))
    {
        throw InvalidParameter("power map: max_tpl must be > 0");
    }

    PowerMap map;
    map.grid = grid;
    map.channel = model;
    map.bsLocation = bs;
    map.maxTpl = maxTpl;
    map.regions = regions;
    map.pools.reserve(regions.size());
    for (const auto& r : regions)
    {
        if (!(r.meanGain > 0.0))
        {
            throw InvalidInput("power map: region " + std::to_string(r.id) + " has no positive mean gain");
        }
        PowerPool pool;
        pool.regionId = r.id;
        for (int i = 1; i <= grid.numLevels; ++i)
        {
            double tpl = grid.Level(i) / r.meanGain;
            if (tpl <= maxTpl)
            {
                pool.entries.push_back(PoolEntry{i, tpl});
            }
        }
        map.pools.push_back(std::move(pool));
    }
    return map;
}

void
ValidatePowerMap(const PowerMap& map)
{
    ValidatePowerGrid(map.grid);
    if (map.pools.size() != map.regions.size())
    {
        throw InvalidInput("power map: pool count differs from region count");
    }
    for (std::size_t i = 0; i < map.regions.size(); ++i)
    {
        const auto& r = map.regions[i];
        const auto& p = map.pools[i];
        if (p.regionId != r.id)
        {
            throw InvalidInput("power map: pools are not aligned with regions");
        }
        if (!(r.meanGain > 0.0))
        {
            throw InvalidInput("power map: region " + std::to_string(r.id) + " has no positive mean gain");
        }
        int prev = 0;
        for (const auto& e : p.entries)
        {
            if (e.level <= prev || e.level > map.grid.numLevels)
            {
                throw InvalidInput("power map: pool of region " + std::to_string(r.id) +
                                   " has an invalid or unsorted level");
            }
            if (!(e.tpl > 0.0) || e.tpl > map.maxTpl)
            {
                throw InvalidInput("power map: pool of region " + std::to_string(r.id) +
                                   " has a TPL outside (0, max_tpl]");
            }
            prev = e.level;
        }
    }
}

std::string
ChannelModelHash(const ChannelModel& model)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(HashLabel(ToJson(model).dump())));
    return buf;
}

nlohmann::json
ToJson(const ChannelModel& model)
{
    nlohmann::json blockages = nlohmann::json::array();
    for (const auto& b : model.blockages)
    {
        nlohmann::json poly = nlohmann::json::array();
        for (const auto& p : b.polygon)
        {
            poly.push_back(PointToJson(p));
        }
        blockages.push_back({{"polygon", poly}, {"attenuation", b.attenuation}});
    }
    return {{"ref_distance", model.refDistance},
            {"ref_gain", model.refGain},
            {"path_loss_exponent", model.pathLossExponent},
            {"blockages", blockages},
            {"sector_gains", model.sectorGains},
            {"shadowing_sigma_db", model.shadowingSigmaDb}};
}

ChannelModel
ChannelModelFromJson(const nlohmann::json& j)
{
    ChannelModel m;
    try
    {
        m.refDistance = j.value("ref_distance", m.refDistance);
        m.refGain = j.value("ref_gain", m.refGain);
        m.pathLossExponent = j.value("path_loss_exponent", m.pathLossExponent);
        m.shadowingSigmaDb = j.value("shadowing_sigma_db", m.shadowingSigmaDb);
        if (j.contains("sector_gains"))
        {
            m.sectorGains = j.at("sector_gains").get<std::vector<double>>();
        }
        if (j.contains("blockages"))
        {
            for (const auto& b : j.at("blockages"))
            {
                Blockage blk;
                blk.attenuation = b.at("attenuation").get<double>();
                for (const auto& p : b.at("polygon"))
                {
                    blk.polygon.push_back(PointFromJson(p));
                }
                m.blockages.push_back(std::move(blk));
            }
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw InvalidInput(std::string("channel model: ") + e.what());
    }
    ValidateChannelModel(m);
    return m;
}

nlohmann::json
ToJson(const PowerGrid& grid)
{
    return {{"N", grid.numLevels},
            {"M", grid.numRbs},
            {"target_sinr", grid.targetSinr},
            {"noise_power", grid.noisePower},
            {"margin", grid.margin},
            {"levels", grid.levels}};
}

PowerGrid
PowerGridFromJson(const nlohmann::json& j)
{
    PowerGrid g;
    try
    {
        g = MakePowerGrid(j.at("N").get<int>(),
                          j.at("M").get<int>(),
                          j.value("target_sinr", 1.0),
                          j.value("noise_power", 1.0),
                          j.value("margin", 1.0));
        if (j.contains("levels"))
        {
            g.levels = j.at("levels").get<std::vector<double>>();
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw InvalidInput(std::string("grid: ") + e.what());
    }
    ValidatePowerGrid(g);
    return g;
}

nlohmann::json
ToJson(const PowerMap& map)
{
    nlohmann::json regions = nlohmann::json::array();
    for (std::size_t i = 0; i < map.regions.size(); ++i)
    {
        const auto& r = map.regions[i];
        nlohmann::json pool = nlohmann::json::array();
        for (const auto& e : map.pools[i].entries)
        {
            pool.push_back({{"level", e.level}, {"tpl", e.tpl}});
        }
        regions.push_back({{"id", r.id},
                           {"center", PointToJson(r.center)},
                           {"extent", nlohmann::json::array({r.width, r.height})},
                           {"mean_gain", r.meanGain},
                           {"pool", pool}});
    }
    return {{"grid", ToJson(map.grid)},
            {"channel_model", ToJson(map.channel)},
            {"bs_location", PointToJson(map.bsLocation)},
            {"max_tpl", map.maxTpl},
            {"metadata", {{"channel_model_hash", ChannelModelHash(map.channel)}}},
            {"regions", regions}};
}

PowerMap
PowerMapFromJson(const nlohmann::json& j)
{
    PowerMap map;
    try
    {
        map.grid = PowerGridFromJson(j.at("grid"));
        map.channel = ChannelModelFromJson(j.value("channel_model", nlohmann::json::object()));
        if (j.contains("bs_location"))
        {
            map.bsLocation = PointFromJson(j.at("bs_location"));
        }
        map.maxTpl = j.value("max_tpl", std::numeric_limits<double>::infinity());
        if (j.contains("metadata") && j.at("metadata").contains("channel_model_hash") &&
            j.at("metadata").at("channel_model_hash").get<std::string>() != ChannelModelHash(map.channel))
        {
            throw InvalidInput("power map: channel_model_hash does not match channel_model");
        }
        for (const auto& r : j.at("regions"))
        {
            Region region;
            region.id = r.at("id").get<int>();
            region.center = PointFromJson(r.at("center"));
            if (r.contains("extent"))
            {
                const auto& ext = r.at("extent");
                region.width = ext.at(0).get<double>();
                region.height = ext.at(1).get<double>();
            }
            region.meanGain = r.at("mean_gain").get<double>();
            PowerPool pool;
            pool.regionId = region.id;
            for (const auto& e : r.at("pool"))
            {
                pool.entries.push_back(PoolEntry{e.at("level").get<int>(), e.at("tpl").get<double>()});
            }
            map.regions.push_back(region);
            map.pools.push_back(std::move(pool));
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw InvalidInput(std::string("power map: ") + e.what());
    }
    ValidatePowerMap(map);
    return map;
}

int
QuantizeSinr(double sinr, int bins, double minDb, double maxDb)
{
    if (bins < 1 || !(maxDb > minDb))
    {
        throw InvalidParameter("SINR quantizer needs bins >= 1 and maxDb > minDb");
    }
    if (!(sinr > 0.0))
    {
        return 0;
    }
    double db = 10.0 * std::log10(sinr);
    double pos = (db - minDb) / (maxDb - minDb) * bins;
    if (pos < 0.0)
    {
        return 0;
    }
    return std::min(bins - 1, static_cast<int>(pos));
}

QLearningResult
RefinePowerMapQLearning(const PowerMap& initial, const SimHook& hook, const QLearningOptions& options)
{
    ValidatePowerMap(initial);
    if (options.episodes < 1 || options.stepsPerEpisode < 1)
    {
        throw InvalidParameter("Q-learning: episodes and steps per episode must be >= 1");
    }
    if (!(options.learningRate > 0.0 && options.learningRate <= 1.0))
    {
        throw InvalidParameter("Q-learning: learning rate must lie in (0, 1]");
    }
    if (!(options.discount >= 0.0 && options.discount < 1.0))
    {
        throw InvalidParameter("Q-learning: discount must lie in [0, 1)");
    }
    if (!(options.exploration >= 0.0 && options.exploration <= 1.0))
    {
        throw InvalidParameter("Q-learning: exploration must lie in [0, 1]");
    }
    QuantizeSinr(1.0, options.sinrBins, options.sinrMinDb, options.sinrMaxDb);

    struct Agent
    {
        std::size_t poolIndex;
        std::vector<AgentAction> actions;
        std::vector<double> q;
        std::vector<char> visited;
        int state = 0;
        std::size_t chosen = 0;
    };

    const int bins = options.sinrBins;
    std::vector<Agent> agents;
    for (std::size_t i = 0; i < initial.pools.size(); ++i)
    {
        const auto& pool = initial.pools[i];
        if (pool.Void())
        {
            continue;
        }
        Agent a;
        a.poolIndex = i;
        for (const auto& e : pool.entries)
        {
            for (int rb = 0; rb < initial.grid.numRbs; ++rb)
            {
                a.actions.push_back(AgentAction{e.level, rb, e.tpl});
            }
        }
        std::stable_sort(a.actions.begin(), a.actions.end(), [](const AgentAction& x, const AgentAction& y) {
            return x.tpl < y.tpl || (x.tpl == y.tpl && x.rb < y.rb);
        });
        a.q.assign(a.actions.size() * static_cast<std::size_t>(bins), 0.0);
        a.visited.assign(static_cast<std::size_t>(bins), 0);
        agents.push_back(std::move(a));
    }

    auto greedy = [](const Agent& a, int state) {
        std::size_t n = a.actions.size();
        const double* row = a.q.data() + static_cast<std::size_t>(state) * n;
        std::size_t best = 0;
        for (std::size_t k = 1; k < n; ++k)
        {
            if (row[k] > row[best])
            {
                best = k;
            }
        }
        return best;
    };

    QLearningResult result;
    Engine rng = StreamKey(options.seed).Child("q_learning").MakeEngine();
    std::vector<AgentAction> joint(agents.size());

    for (int ep = 0; ep < options.episodes && !agents.empty(); ++ep)
    {
        double maxDelta = 0.0;
        double previous = std::numeric_limits<double>::quiet_NaN();
        for (auto& a : agents)
        {
            a.state = 0;
        }
        for (int step = 0; step < options.stepsPerEpisode; ++step)
        {
            for (std::size_t k = 0; k < agents.size(); ++k)
            {
                auto& a = agents[k];
                a.visited[static_cast<std::size_t>(a.state)] = 1;
                if (options.exploration > 0.0 && UniformUnit(rng) < options.exploration)
                {
                    a.chosen = UniformIndex(rng, a.actions.size());
                }
                else
                {
                    a.chosen = greedy(a, a.state);
                }
                joint[k] = a.actions[a.chosen];
            }

            StepFeedback fb = hook(joint);
            if (fb.sinr.size() != agents.size())
            {
                throw InvalidInput("Q-learning: hook returned a SINR list of the wrong size");
            }
            double reward = (!std::isnan(previous) && fb.consumption < previous && fb.consumption > 0.0)
                                ? 1.0 / fb.consumption
                                : 0.0;
            previous = fb.consumption;

            for (std::size_t k = 0; k < agents.size(); ++k)
            {
                auto& a = agents[k];
                int next = QuantizeSinr(fb.sinr[k], bins, options.sinrMinDb, options.sinrMaxDb);
                std::size_t n = a.actions.size();
                double& cell = a.q[static_cast<std::size_t>(a.state) * n + a.chosen];
                double target = reward + options.discount * a.q[static_cast<std::size_t>(next) * n + greedy(a, next)];
                double delta = options.learningRate * (target - cell);
                cell += delta;
                maxDelta = std::max(maxDelta, std::abs(delta));
                a.state = next;
            }
        }
        ++result.episodesRun;
        double scale = 0.0;
        for (const auto& a : agents)
        {
            for (double v : a.q)
            {
                scale = std::max(scale, std::abs(v));
            }
        }
        if (maxDelta <= options.tolerance * scale)
        {
            result.converged = true;
            break;
        }
    }

    result.map = initial;
    for (auto& a : agents)
    {
        std::vector<int> levels;
        for (int s = 0; s < bins; ++s)
        {
            if (a.visited[static_cast<std::size_t>(s)])
            {
                levels.push_back(a.actions[greedy(a, s)].level);
            }
        }
        if (levels.empty())
        {
            levels.push_back(a.actions[greedy(a, 0)].level);
        }
        auto& pool = result.map.pools[a.poolIndex];
        std::erase_if(pool.entries, [&](const PoolEntry& e) {
            return std::find(levels.begin(), levels.end(), e.level) == levels.end();
        });
        result.qTables.push_back(std::move(a.q));
    }
    return result;
}

SimHook
MakeSicHook(const PowerMap& map)
{
    ValidatePowerMap(map);
    std::vector<double> gains;
    for (std::size_t i = 0; i < map.pools.size(); ++i)
    {
        if (!map.pools[i].Void())
        {
            gains.push_back(map.regions[i].meanGain);
        }
    }
    PowerGrid grid = map.grid;
    return [grid, gains](std::span<const AgentAction> actions) {
        if (actions.size() != gains.size())
        {
            throw InvalidInput("SIC hook: expected one action per agent");
        }
        StepFeedback fb;
        fb.sinr.assign(actions.size(), 0.0);
        std::vector<SicSignal> signals;
        DecodeOutcome outcome;
        for (int rb = 0; rb < grid.numRbs; ++rb)
        {
            signals.clear();
            for (std::size_t k = 0; k < actions.size(); ++k)
            {
                if (actions[k].rb == rb)
                {
                    signals.push_back(SicSignal{static_cast<DeviceId>(k),
                                                actions[k].level,
                                                grid.Level(actions[k].level),
                                                actions[k].tpl * gains[k],
                                                grid.targetSinr});
                }
            }
            if (signals.empty())
            {
                continue;
            }
            std::vector<SicSignal> all(signals);
            DecodeSuccessive(signals, grid.noisePower, outcome);
            for (DeviceId id : outcome.succeeded)
            {
                double own = 0.0;
                double rank = 0.0;
                double below = 0.0;
                for (const auto& s : all)
                {
                    if (s.device == id)
                    {
                        own = s.power;
                        rank = s.rank;
                    }
                }
                for (const auto& s : all)
                {
                    if (s.device != id && s.rank <= rank)
                    {
                        below += s.power;
                    }
                }
                fb.sinr[id] = own / (below + grid.noisePower);
            }
        }
        for (const auto& a : actions)
        {
            fb.consumption += a.tpl;
        }
        return fb;
    };
}

} // namespace mtnoma
