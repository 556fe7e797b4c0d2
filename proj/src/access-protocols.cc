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

#include "mtnoma/access-protocols.h"

#include "mtnoma/errors.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mtnoma
{

namespace
{

constexpr DeviceId kGbDevice = static_cast<DeviceId>(-1);

/// Highest level index whose power is <= limit; 0 when none.
int
LevelsAtMost(std::span<const double> levels, double limit)
{
    auto it = std::upper_bound(levels.begin(), levels.end(), limit);
    return static_cast<int>(it - levels.begin());
}

} // namespace

std::string_view
ToString(ThresholdType type)
{
    return type == ThresholdType::LowerLimit ? "lower_limit" : "upper_limit";
}

std::string_view
ToString(ProtocolKind kind)
{
    return kind == ProtocolKind::OpenLoop ? "open_loop" : "dynamic";
}

ThresholdType
ParseThresholdType(std::string_view text)
{
    if (text == "lower_limit")
    {
        return ThresholdType::LowerLimit;
    }
    if (text == "upper_limit")
    {
        return ThresholdType::UpperLimit;
    }
    throw InvalidParameter("unknown threshold type '" + std::string(text) + "'");
}

ProtocolKind
ParseProtocolKind(std::string_view text)
{
    if (text == "open_loop")
    {
        return ProtocolKind::OpenLoop;
    }
    if (text == "dynamic")
    {
        return ProtocolKind::Dynamic;
    }
    throw InvalidParameter("unknown semi-GF protocol '" + std::string(text) + "'");
}

std::optional<int>
ComputeThreshold(double gbPower, double qosSinr, double noise, std::span<const double> levels, ThresholdType type)
{
    if (levels.empty())
    {
        throw InvalidParameter("threshold: empty level set");
    }
    if (!(gbPower > 0.0) || !(qosSinr > 0.0) || !(noise >= 0.0))
    {
        throw InvalidParameter("threshold: GB power and QoS SINR must be > 0, noise >= 0");
    }
    if (type == ThresholdType::UpperLimit)
    {
        double iMax = gbPower / qosSinr - noise;
        if (!(iMax > 0.0))
        {
            return std::nullopt;
        }
        // Small relative slack so that I_max landing on a level admits it.
        int k = LevelsAtMost(levels, iMax * (1.0 + kSinrRelTol));
        return k == 0 ? std::nullopt : std::optional<int>(k);
    }
    auto it = std::lower_bound(levels.begin(), levels.end(), gbPower * (1.0 - kSinrRelTol));
    if (it == levels.end())
    {
        return std::nullopt;
    }
    return static_cast<int>(it - levels.begin()) + 1;
}

int
NoGbThreshold(ThresholdType type)
{
    return type == ThresholdType::UpperLimit ? kUnboundedUpper : 0;
}

bool
LevelAllowed(int level, std::optional<int> threshold, ThresholdType type)
{
    if (type == ThresholdType::UpperLimit)
    {
        return threshold.has_value() && level <= *threshold;
    }
    // LowerLimit with no threshold: the GB power exceeds every level.
    return threshold.has_value() && level > *threshold;
}

PowerMap
PrunePowerMap(const PowerMap& map, std::optional<int> threshold, ThresholdType type)
{
    PowerMap out = map;
    for (auto& pool : out.pools)
    {
        std::erase_if(pool.entries, [&](const PoolEntry& e) { return !LevelAllowed(e.level, threshold, type); });
    }
    return out;
}

int
SlotGb(int n, int numRbs)
{
    if (n < 0 || numRbs < 1)
    {
        throw InvalidParameter("GB slot: n must be >= 0 and M >= 1");
    }
    return std::min(n, numRbs);
}

TwoPointFading
CalibrateTwoPointFading(double averagePower,
                        double qosSinr,
                        double noise,
                        std::span<const double> levels,
                        ThresholdType type,
                        double violationProb)
{
    if (!(violationProb >= 0.0 && violationProb <= 1.0))
    {
        throw InvalidParameter("fading: violation probability must lie in [0, 1]");
    }
    if (violationProb == 0.0)
    {
        return {};
    }
    if (violationProb == 1.0)
    {
        throw InvalidParameter("fading: violation probability 1 admits no unit-mean law");
    }
    auto avgThreshold = ComputeThreshold(averagePower, qosSinr, noise, levels, type);
    if (!avgThreshold)
    {
        throw InvalidParameter("fading: the average GB power admits no GF level, nothing to violate");
    }
    int t = *avgThreshold;
    double violatingPower = 0.0;
    if (type == ThresholdType::UpperLimit)
    {
        double below = t >= 2 ? levels[static_cast<std::size_t>(t - 2)] : 0.0;
        double iMax = 0.5 * (below + levels[static_cast<std::size_t>(t - 1)]);
        violatingPower = qosSinr * (iMax + noise);
    }
    else
    {
        if (t >= static_cast<int>(levels.size()))
        {
            throw InvalidParameter("fading: no level above the average lower-limit threshold");
        }
        violatingPower = 0.5 * (levels[static_cast<std::size_t>(t - 1)] + levels[static_cast<std::size_t>(t)]);
    }
    TwoPointFading f;
    f.violationProb = violationProb;
    f.violating = violatingPower / averagePower;
    f.nominal = (1.0 - violationProb * f.violating) / (1.0 - violationProb);
    if (!(f.nominal > 0.0))
    {
        throw InvalidParameter("fading: violation probability too high for a unit-mean two-point law");
    }
    auto nominalThreshold = ComputeThreshold(averagePower * f.nominal, qosSinr, noise, levels, type);
    bool keeps = type == ThresholdType::UpperLimit ? (nominalThreshold && *nominalThreshold >= t)
                                                   : (nominalThreshold && *nominalThreshold <= t);
    if (!keeps)
    {
        throw InvalidParameter("fading: the non-violating branch would also break the average threshold");
    }
    return f;
}

WindowedMean::WindowedMean(int window, double initial)
    : m_buffer(static_cast<std::size_t>(std::max(window, 1)), initial),
      m_sum(initial * static_cast<double>(m_buffer.size()))
{
    if (window < 1)
    {
        throw InvalidParameter("windowed mean: window must be >= 1");
    }
}

void
WindowedMean::Add(double sample)
{
    m_sum += sample - m_buffer[m_next];
    m_buffer[m_next] = sample;
    m_next = (m_next + 1) % m_buffer.size();
    // Re-sum once per window to stop rounding drift.
    if (++m_sinceRefresh == m_buffer.size())
    {
        m_sinceRefresh = 0;
        m_sum = 0.0;
        for (double v : m_buffer)
        {
            m_sum += v;
        }
    }
}

void
SlotResult::Reset(int numRbs)
{
    auto m = static_cast<std::size_t>(numRbs);
    gbPresent.assign(m, 0);
    gbSuccess.assign(m, 0);
    gbOutage.assign(m, 0);
    gfBusy.assign(m, 0);
    gfSuccesses.clear();
    gfFailures.clear();
    gfSilent.clear();
    collisions = 0;
    admittedGf = 0;
    gfEnergy = 0.0;
}

AccessSlot::AccessSlot(const PowerGrid& grid, DecodeMode mode, const PowerMap* map, int workers)
    : m_grid(grid),
      m_mode(mode),
      m_map(map)
{
    ValidatePowerGrid(grid);
    if (workers < 1)
    {
        throw InvalidParameter("workers must be >= 1");
    }
    if (map)
    {
        ValidatePowerMap(*map);
        if (map->grid.levels != grid.levels || map->grid.numRbs != grid.numRbs)
        {
            throw InvalidInput("power map was built for a different grid");
        }
    }
    PowerPool unit;
    unit.regionId = -1;
    for (int i = 1; i <= grid.numLevels; ++i)
    {
        unit.entries.push_back(PoolEntry{i, grid.Level(i)});
    }
    m_unitPool.push_back(std::move(unit));
    if (workers > 1)
    {
        m_pool = std::make_unique<WorkerPool>(workers);
    }
    m_work.resize(static_cast<std::size_t>(grid.numRbs));
    for (auto& w : m_work)
    {
        w.counts.assign(static_cast<std::size_t>(grid.numLevels), 0);
    }
}

AccessSlot::~AccessSlot() = default;

double
AccessSlot::Shadowing(Engine& rng) const
{
    double sigma = m_map ? m_map->channel.shadowingSigmaDb : 0.0;
    if (m_mode != DecodeMode::Sinr || sigma <= 0.0)
    {
        return 1.0;
    }
    double u1 = UniformUnit(rng);
    double u2 = UniformUnit(rng);
    double z = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return std::pow(10.0, sigma * z / 10.0);
}

void
AccessSlot::Select(std::span<const GfContender> contenders,
                   const std::vector<std::optional<int>>* thresholds,
                   ThresholdType type,
                   Engine& selectRng,
                   Engine& shadowRng)
{
    const int m = m_grid.numRbs;
    const std::size_t regions = m_map ? m_map->regions.size() : 0;
    auto poolAt = [&](int region) -> const PowerPool& {
        return region < 0 ? m_unitPool[0] : m_map->pools[static_cast<std::size_t>(region)];
    };

    // m_ranges[(pool * M + rb) * 2 + {0,1}] = allowed entry range [lo, hi).
    if (thresholds)
    {
        m_ranges.assign((regions + 1) * static_cast<std::size_t>(m) * 2, 0);
        for (std::size_t p = 0; p <= regions; ++p)
        {
            const auto& entries = poolAt(static_cast<int>(p) - 1).entries;
            for (int rb = 0; rb < m; ++rb)
            {
                auto t = (*thresholds)[static_cast<std::size_t>(rb)];
                int lo = 0;
                int hi = 0;
                for (std::size_t e = 0; e < entries.size(); ++e)
                {
                    if (LevelAllowed(entries[e].level, t, type))
                    {
                        if (hi == lo)
                        {
                            lo = static_cast<int>(e);
                        }
                        hi = static_cast<int>(e) + 1;
                    }
                }
                std::size_t base = (p * static_cast<std::size_t>(m) + static_cast<std::size_t>(rb)) * 2;
                m_ranges[base] = lo;
                m_ranges[base + 1] = hi;
            }
        }
    }

    for (const auto& c : contenders)
    {
        if (c.region < -1 || (c.region >= 0 && static_cast<std::size_t>(c.region) >= regions))
        {
            throw InvalidInput("contender " + std::to_string(c.device) + " names an unknown region");
        }
        const auto& entries = poolAt(c.region).entries;
        int rb = 0;
        std::size_t entry = 0;
        if (!thresholds)
        {
            std::uint64_t total = entries.size() * static_cast<std::uint64_t>(m);
            if (total == 0)
            {
                m_result.gfSilent.push_back(c.device);
                continue;
            }
            std::uint64_t idx = UniformIndex(selectRng, total);
            rb = static_cast<int>(idx / entries.size());
            entry = idx % entries.size();
        }
        else
        {
            std::size_t base = static_cast<std::size_t>(c.region + 1) * static_cast<std::size_t>(m) * 2;
            std::uint64_t total = 0;
            for (int r = 0; r < m; ++r)
            {
                total += static_cast<std::uint64_t>(m_ranges[base + 2 * r + 1] - m_ranges[base + 2 * r]);
            }
            if (total == 0)
            {
                m_result.gfSilent.push_back(c.device);
                continue;
            }
            std::uint64_t idx = UniformIndex(selectRng, total);
            for (rb = 0; rb < m; ++rb)
            {
                auto width = static_cast<std::uint64_t>(m_ranges[base + 2 * rb + 1] - m_ranges[base + 2 * rb]);
                if (idx < width)
                {
                    entry = static_cast<std::size_t>(m_ranges[base + 2 * rb]) + idx;
                    break;
                }
                idx -= width;
            }
        }
        const PoolEntry& e = entries[entry];
        double power = m_grid.Level(e.level) * Shadowing(shadowRng);
        m_work[static_cast<std::size_t>(rb)].gf.push_back(Transmission{c.device, e.level, e.tpl, power});
        ++m_result.admittedGf;
        m_result.gfEnergy += e.tpl;
    }
}

void
AccessSlot::DecodeRb(RbWork& w, ThresholdType type) const
{
    w.succeeded.clear();
    w.failed.clear();
    w.outage = false;
    w.gbSuccess = false;
    w.collisions = 0;
    std::fill(w.counts.begin(), w.counts.end(), 0);
    for (const auto& t : w.gf)
    {
        ++w.counts[static_cast<std::size_t>(t.level - 1)];
    }
    for (int c : w.counts)
    {
        if (c >= 2)
        {
            w.collisions += c;
        }
    }
    auto violates = [&](int level) { return w.gb && !LevelAllowed(level, w.instantThreshold, type); };
    for (const auto& t : w.gf)
    {
        if (violates(t.level))
        {
            w.outage = true;
            break;
        }
    }

    if (m_mode == DecodeMode::Sinr)
    {
        w.signals.clear();
        for (const auto& t : w.gf)
        {
            w.signals.push_back(SicSignal{t.device, t.level, m_grid.Level(t.level), t.power, m_grid.targetSinr});
        }
        if (w.gb)
        {
            w.signals.push_back(SicSignal{kGbDevice,
                                          0,
                                          w.gb->instantaneousPower,
                                          w.gb->instantaneousPower,
                                          w.gb->qosSinr});
        }
        DecodeSuccessive(w.signals, m_grid.noisePower, w.outcome);
        for (DeviceId d : w.outcome.succeeded)
        {
            if (d == kGbDevice)
            {
                w.gbSuccess = true;
            }
            else
            {
                w.succeeded.push_back(d);
            }
        }
        for (DeviceId d : w.outcome.failed)
        {
            if (d != kGbDevice)
            {
                w.failed.push_back(d);
            }
        }
        return;
    }

    // Collision-limited: find the highest level at which SIC stops.
    bool lower = w.gb && type == ThresholdType::LowerLimit;
    int cutoff = 0;
    for (int level = m_grid.numLevels; level >= 1; --level)
    {
        int c = w.counts[static_cast<std::size_t>(level - 1)];
        if (c >= 2 || (lower && c == 1 && violates(level)))
        {
            cutoff = level;
            break;
        }
    }
    bool gfBlocked = false;
    if (w.gb && !lower)
    {
        // GB is decoded first; a violated threshold leaves it undecodable.
        w.gbSuccess = !w.outage;
        gfBlocked = w.outage;
    }
    else if (lower)
    {
        w.gbSuccess = cutoff == 0;
    }
    for (const auto& t : w.gf)
    {
        if (!gfBlocked && t.level > cutoff)
        {
            w.succeeded.push_back(t.device);
        }
        else
        {
            w.failed.push_back(t.device);
        }
    }
}

void
AccessSlot::DecodeAll(ThresholdType type)
{
    if (m_pool)
    {
        m_pool->Run(m_work.size(), [&](std::size_t rb) { DecodeRb(m_work[rb], type); });
    }
    else
    {
        for (auto& w : m_work)
        {
            DecodeRb(w, type);
        }
    }
    for (std::size_t rb = 0; rb < m_work.size(); ++rb)
    {
        const auto& w = m_work[rb];
        m_result.gbSuccess[rb] = w.gb && w.gbSuccess;
        m_result.gbOutage[rb] = w.gb && w.outage;
        m_result.gfBusy[rb] = !w.gf.empty();
        m_result.collisions += w.collisions;
        m_result.gfSuccesses.insert(m_result.gfSuccesses.end(), w.succeeded.begin(), w.succeeded.end());
        m_result.gfFailures.insert(m_result.gfFailures.end(), w.failed.begin(), w.failed.end());
    }
}

const SlotResult&
AccessSlot::RunGf(std::span<const GfContender> contenders, Engine& selectRng, Engine& shadowRng)
{
    m_result.Reset(m_grid.numRbs);
    for (auto& w : m_work)
    {
        w.gf.clear();
        w.gb = nullptr;
    }
    Select(contenders, nullptr, ThresholdType::UpperLimit, selectRng, shadowRng);
    DecodeAll(ThresholdType::UpperLimit);
    return m_result;
}

const SlotResult&
AccessSlot::RunSemiGf(std::span<const GbState> gb,
                      std::span<const GfContender> contenders,
                      ThresholdType type,
                      ProtocolKind protocol,
                      Engine& selectRng,
                      Engine& shadowRng)
{
    m_result.Reset(m_grid.numRbs);
    std::vector<std::optional<int>> thresholds(m_work.size(), NoGbThreshold(type));
    for (auto& w : m_work)
    {
        w.gf.clear();
        w.gb = nullptr;
        w.threshold = NoGbThreshold(type);
        w.instantThreshold = w.threshold;
    }
    for (const auto& g : gb)
    {
        if (g.rb < 0 || g.rb >= m_grid.numRbs)
        {
            throw InvalidInput("GB device on RB " + std::to_string(g.rb) + " outside the grid");
        }
        auto& w = m_work[static_cast<std::size_t>(g.rb)];
        if (w.gb)
        {
            throw InvalidInput("more than one GB device on RB " + std::to_string(g.rb));
        }
        w.gb = &g;
        w.instantThreshold = ComputeThreshold(g.instantaneousPower, g.qosSinr, m_grid.noisePower, m_grid.levels, type);
        w.threshold = protocol == ProtocolKind::Dynamic
                          ? w.instantThreshold
                          : ComputeThreshold(g.averagePower, g.qosSinr, m_grid.noisePower, m_grid.levels, type);
        thresholds[static_cast<std::size_t>(g.rb)] = w.threshold;
        m_result.gbPresent[static_cast<std::size_t>(g.rb)] = 1;
    }
    Select(contenders, &thresholds, type, selectRng, shadowRng);
    DecodeAll(type);
    return m_result;
}

SlotResult
SlotGf(std::span<const GfContender> contenders, const PowerGrid& grid, const PowerMap* map, DecodeMode mode, Engine& rng)
{
    AccessSlot slot(grid, mode, map);
    return slot.RunGf(contenders, rng, rng);
}

SlotResult
SlotSemiGf(std::span<const GbState> gb,
           std::span<const GfContender> contenders,
           const PowerMap* map,
           ThresholdType type,
           ProtocolKind protocol,
           const PowerGrid& grid,
           DecodeMode mode,
           Engine& rng)
{
    AccessSlot slot(grid, mode, map);
    return slot.RunSemiGf(gb, contenders, type, protocol, rng, rng);
}

} // namespace mtnoma
