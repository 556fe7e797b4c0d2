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

#include "mtnoma/sim-engine.h"

#include "mtnoma/access-protocols.h"
#include "mtnoma/errors.h"
#include "mtnoma/parallel.h"
#include "mtnoma/random-streams.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace mtnoma
{

namespace
{

OptimalLoadResult
CachedOptimalLoad(const PowerGrid& grid, DecodeMode mode, int nMax)
{
    using Key = std::tuple<std::vector<double>, int, double, double, int, int>;
    static std::mutex mutex;
    static std::map<Key, OptimalLoadResult> cache;
    Key key{grid.levels, grid.numRbs, grid.targetSinr, grid.noisePower, static_cast<int>(mode), nMax};
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end())
        {
            return it->second;
        }
    }
    OptimalLoadResult r = OptimalLoad(grid, mode, nMax);
    std::lock_guard lock(mutex);
    cache.emplace(key, r);
    return r;
}

struct SummaryAccumulator
{
    std::int64_t slots = 0;
    double sum = 0.0;
    double sumSq = 0.0;
    double transmitters = 0.0;
    double backlog = 0.0;
    std::int64_t gbPresent = 0;
    std::int64_t gbOutages = 0;
    std::int64_t collisions = 0;
    std::int64_t gfTransmissions = 0;
    double energy = 0.0;
    std::int64_t successes = 0;
    std::int64_t transmissions = 0;
    std::int64_t dropped = 0;

    void Add(const SlotRecord& r, int gfTransmitters)
    {
        ++slots;
        sum += r.successes;
        sumSq += static_cast<double>(r.successes) * r.successes;
        transmitters += r.transmitters;
        backlog += r.backlogged;
        gbPresent += r.gbPresent;
        gbOutages += r.gbOutages;
        collisions += r.collisions;
        gfTransmissions += gfTransmitters;
        energy += r.energy;
        successes += r.successes;
        transmissions += r.transmitters;
        dropped += r.dropped;
    }

    RunSummary Finish() const
    {
        RunSummary s;
        s.slots = slots;
        if (slots == 0)
        {
            return s;
        }
        auto n = static_cast<double>(slots);
        s.aar = sum / n;
        double var = std::max(0.0, sumSq / n - s.aar * s.aar);
        s.aarStdError = slots > 1 ? std::sqrt(var * n / (n - 1) / n) : 0.0;
        s.systemLoad = transmitters / n;
        s.meanBacklog = backlog / n;
        s.gbOutageRate = gbPresent > 0 ? static_cast<double>(gbOutages) / static_cast<double>(gbPresent) : 0.0;
        s.collisionRate =
            gfTransmissions > 0 ? static_cast<double>(collisions) / static_cast<double>(gfTransmissions) : 0.0;
        s.energyPerSuccess = successes > 0 ? energy / static_cast<double>(successes) : 0.0;
        s.droppedPerSlot = static_cast<double>(dropped) / n;
        s.successes = successes;
        s.transmissions = transmissions;
        s.dropped = dropped;
        return s;
    }
};

} // namespace

bool
operator==(const PeriodRecord& a, const PeriodRecord& b)
{
    return a.index == b.index && a.startSlot == b.startSlot && a.slots == b.slots && a.rate == b.rate &&
           a.nextRate == b.nextRate && a.idleRbFraction == b.idleRbFraction && a.loadEstimate == b.loadEstimate &&
           a.successesPerSlot == b.successesPerSlot && a.meanTransmitters == b.meanTransmitters;
}

bool
operator==(const MetricsSeries& a, const MetricsSeries& b)
{
    bool ol = a.optimalLoad.has_value() == b.optimalLoad.has_value() &&
              (!a.optimalLoad || (a.optimalLoad->optimalLoad == b.optimalLoad->optimalLoad &&
                                  a.optimalLoad->maxAar == b.optimalLoad->maxAar &&
                                  a.optimalLoad->exact == b.optimalLoad->exact));
    return ol && a.seed == b.seed && a.window == b.window && a.slots == b.slots && a.windows == b.windows &&
           a.periods == b.periods && a.summary == b.summary;
}

BarringState
InitialBarringState(const RunConfig& config)
{
    PowerGrid grid = config.grid.Build();
    int nMax = config.barring.searchMax > 0 ? config.barring.searchMax
                                            : std::max(20, 4 * grid.numLevels * grid.numRbs);
    OptimalLoadResult opt = CachedOptimalLoad(grid, config.decodeMode, nMax);
    BarringState s;
    s.rate = 1.0;
    s.period = config.barring.period;
    s.optimalLoad = opt.optimalLoad;
    s.maxAar = opt.maxAar;
    s.loadCap = config.barring.loadCap > 0.0 ? config.barring.loadCap : 100.0 * opt.optimalLoad;
    return s;
}

MetricsSeries
RunSimulation(const RunConfig& config, std::uint64_t seed, const SimOptions& options)
{
    return RunSimulation(config, ResolvePowerMap(config), seed, options);
}

MetricsSeries
RunSimulation(const RunConfig& config, const std::optional<PowerMap>& map, std::uint64_t seed, const SimOptions& options)
{
    const PowerGrid grid = config.grid.Build();
    const int m = grid.numRbs;
    const int n = config.traffic.devices;
    const PowerMap* mapPtr = map ? &*map : nullptr;
    const bool semi = config.scheme == Scheme::SemiGf;
    if (semi && !mapPtr)
    {
        throw ConfigError("power_map", "scheme semi_gf requires a power map source");
    }

    const StreamKey key = StreamKey(seed).Child("sim");
    Engine trafficRng = key.Child("traffic").MakeEngine();
    Engine barringRng = key.Child("barring").MakeEngine();
    Engine selectRng = key.Child("select").MakeEngine();
    Engine placementRng = key.Child("placement").MakeEngine();
    Engine shadowRng = key.Child("shadowing").MakeEngine();
    std::vector<Engine> fadingRng;
    for (int rb = 0; rb < m; ++rb)
    {
        fadingRng.push_back(key.Child("fading").Child(static_cast<std::uint64_t>(rb)).MakeEngine());
    }

    const int numGb = semi ? std::min(n, m) : 0;
    const auto numRegions = static_cast<std::uint64_t>(mapPtr ? mapPtr->regions.size() : 0);
    std::vector<char> hasPacket(static_cast<std::size_t>(n), 0);
    std::vector<int> attempts(static_cast<std::size_t>(n), 0);
    std::vector<int> region(static_cast<std::size_t>(n), -1);
    if (mapPtr && config.traffic.placement == Placement::Fixed)
    {
        for (int d = numGb; d < n; ++d)
        {
            region[static_cast<std::size_t>(d)] = static_cast<int>(UniformIndex(placementRng, numRegions));
        }
    }

    AccessSlot access(grid, config.decodeMode, mapPtr, options.workers);
    TwoPointFading fading;
    std::vector<WindowedMean> estimators;
    if (semi)
    {
        fading = CalibrateTwoPointFading(config.semiGf.gbAvgPower,
                                         config.semiGf.gbQosSinr,
                                         grid.noisePower,
                                         grid.levels,
                                         config.semiGf.thresholdType,
                                         config.semiGf.protocol.violationProb);
        estimators.assign(static_cast<std::size_t>(m),
                          WindowedMean(config.semiGf.protocol.estimationWindow, config.semiGf.gbAvgPower));
    }

    MetricsSeries series;
    series.seed = seed;
    series.window = config.EffectiveWindow();
    std::optional<BarringController> controller;
    if (config.barring.enabled)
    {
        BarringState state = InitialBarringState(config);
        series.optimalLoad = OptimalLoadResult{state.optimalLoad, state.maxAar, true};
        controller.emplace(state, m);
    }
    if (config.metrics.perSlot)
    {
        series.slots.reserve(static_cast<std::size_t>(config.slots));
    }

    SummaryAccumulator acc;
    std::vector<GfContender> contenders;
    std::vector<GbState> gbStates;
    std::vector<char> gbBusy(static_cast<std::size_t>(m), 0);
    int gbCursor = 0;
    double windowSum = 0.0;
    int windowSlots = 0;
    std::int64_t windowStart = 0;
    double periodTransmitters = 0.0;

    auto deliver = [&](DeviceId d) {
        hasPacket[d] = 0;
        attempts[d] = 0;
    };
    auto fail = [&](DeviceId d, SlotRecord& rec) {
        if (++attempts[d] >= config.traffic.maxAttempts)
        {
            hasPacket[d] = 0;
            attempts[d] = 0;
            ++rec.dropped;
        }
    };

    for (std::int64_t slot = 0; slot < config.slots; ++slot)
    {
        SlotRecord rec;
        rec.slot = slot;

        double p = config.traffic.activationProb;
        if (config.traffic.kind == TrafficKind::Burst)
        {
            p = slot == config.traffic.burstSlot ? config.traffic.burstFraction : config.traffic.backgroundProb;
        }
        int gfBacklog = 0;
        for (int d = 0; d < n; ++d)
        {
            auto& has = hasPacket[static_cast<std::size_t>(d)];
            if (!has && p > 0.0 && (p >= 1.0 || UniformUnit(trafficRng) < p))
            {
                has = 1;
            }
            rec.backlogged += has;
            gfBacklog += (has && d >= numGb) ? 1 : 0;
        }

        int gfTransmitters = 0;
        if (config.scheme == Scheme::Gb)
        {
            int served = 0;
            const int start = gbCursor;
            for (int k = 0; k < n && served < m; ++k)
            {
                int d = (start + k) % n;
                if (hasPacket[static_cast<std::size_t>(d)])
                {
                    deliver(static_cast<DeviceId>(d));
                    ++served;
                    gbCursor = (d + 1) % n;
                }
            }
            rec.active = served;
            rec.transmitters = served;
            rec.successes = served;
            rec.energy = served * config.semiGf.gbAvgPower;
        }
        else
        {
            contenders.clear();
            gbStates.clear();
            if (semi)
            {
                for (int rb = 0; rb < m; ++rb)
                {
                    double inst = config.semiGf.gbAvgPower * fading.Draw(fadingRng[static_cast<std::size_t>(rb)]);
                    if (rb < numGb && hasPacket[static_cast<std::size_t>(rb)])
                    {
                        auto& est = estimators[static_cast<std::size_t>(rb)];
                        gbStates.push_back(GbState{rb,
                                                   static_cast<DeviceId>(rb),
                                                   inst,
                                                   est.Value(),
                                                   config.semiGf.gbQosSinr});
                        est.Add(inst);
                    }
                }
            }
            const double rate = controller ? controller->Rate() : 1.0;
            for (int d = numGb; d < n; ++d)
            {
                if (!hasPacket[static_cast<std::size_t>(d)])
                {
                    continue;
                }
                if (controller && !PassesBarring(rate, barringRng))
                {
                    continue;
                }
                int r = region[static_cast<std::size_t>(d)];
                if (mapPtr && config.traffic.placement == Placement::Resample)
                {
                    r = static_cast<int>(UniformIndex(placementRng, numRegions));
                }
                contenders.push_back(GfContender{static_cast<DeviceId>(d), r});
            }

            const SlotResult& res = semi ? access.RunSemiGf(gbStates,
                                                            contenders,
                                                            config.semiGf.thresholdType,
                                                            config.semiGf.protocol.kind,
                                                            selectRng,
                                                            shadowRng)
                                         : access.RunGf(contenders, selectRng, shadowRng);

            for (const auto& g : gbStates)
            {
                if (res.gbSuccess[static_cast<std::size_t>(g.rb)])
                {
                    deliver(g.device);
                    ++rec.gbSuccesses;
                }
                else
                {
                    fail(g.device, rec);
                }
                rec.gbOutages += res.gbOutage[static_cast<std::size_t>(g.rb)];
            }
            for (DeviceId d : res.gfSuccesses)
            {
                deliver(d);
            }
            for (DeviceId d : res.gfFailures)
            {
                fail(d, rec);
            }
            const int gbCount = static_cast<int>(gbStates.size());
            gfTransmitters = res.admittedGf;
            rec.gbPresent = gbCount;
            rec.active = gbCount + static_cast<int>(contenders.size());
            rec.transmitters = gbCount + res.admittedGf;
            rec.successes = rec.gbSuccesses + static_cast<int>(res.gfSuccesses.size());
            rec.failures = (gbCount - rec.gbSuccesses) + static_cast<int>(res.gfFailures.size());
            rec.silent = static_cast<int>(res.gfSilent.size());
            rec.collisions = res.collisions;
            rec.energy = res.gfEnergy + gbCount * config.semiGf.gbAvgPower;

            if (controller)
            {
                controller->RecordSlot(res.gfBusy, rec.successes);
                periodTransmitters += rec.transmitters;
                if (controller->PeriodComplete())
                {
                    std::optional<double> oracle;
                    if (config.barring.estimator == LoadEstimator::Oracle)
                    {
                        oracle = static_cast<double>(gfBacklog);
                    }
                    PeriodRecord pr = controller->EndPeriod(oracle);
                    pr.meanTransmitters = periodTransmitters / pr.slots;
                    periodTransmitters = 0.0;
                    series.periods.push_back(pr);
                }
            }
        }

        windowSum += rec.successes;
        if (++windowSlots == series.window)
        {
            series.windows.push_back(WindowRecord{windowStart, windowSlots, windowSum / windowSlots});
            windowStart = slot + 1;
            windowSum = 0.0;
            windowSlots = 0;
        }
        if (slot >= config.warmupSlots)
        {
            acc.Add(rec, gfTransmitters);
        }
        if (config.metrics.perSlot)
        {
            series.slots.push_back(rec);
        }
    }
    if (windowSlots > 0)
    {
        series.windows.push_back(WindowRecord{windowStart, windowSlots, windowSum / windowSlots});
    }
    series.summary = acc.Finish();
    return series;
}

const std::vector<std::string>&
SweepMetricNames()
{
    static const std::vector<std::string> names{"aar",
                                                "system_load",
                                                "mean_backlog",
                                                "gb_outage_rate",
                                                "collision_rate",
                                                "energy_per_success",
                                                "dropped_per_slot"};
    return names;
}

std::vector<double>
SummaryValues(const RunSummary& s)
{
    return {s.aar, s.systemLoad, s.meanBacklog, s.gbOutageRate, s.collisionRate, s.energyPerSuccess, s.droppedPerSlot};
}

std::vector<std::uint64_t>
ReplicationSeeds(const SweepSpec& spec)
{
    if (spec.replications < 1)
    {
        throw InvalidParameter("sweep: replications must be >= 1");
    }
    if (!spec.seeds.empty())
    {
        if (static_cast<int>(spec.seeds.size()) != spec.replications)
        {
            throw InvalidParameter("sweep: explicit seed list must have one seed per replication");
        }
        return spec.seeds;
    }
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < spec.replications; ++r)
    {
        seeds.push_back(spec.baseSeed ^ static_cast<std::uint64_t>(r));
    }
    return seeds;
}

RunConfig
WithAxisValue(const RunConfig& config, const std::string& axis, double value)
{
    nlohmann::json doc = ToJson(config);
    if (value == std::floor(value) && std::abs(value) < 9e15)
    {
        SetConfigValue(doc, axis, nlohmann::json(static_cast<std::int64_t>(value)));
    }
    else
    {
        SetConfigValue(doc, axis, nlohmann::json(value));
    }
    return ParseConfig(doc);
}

SweepTable
Sweep(const RunConfig& config, const SweepSpec& spec)
{
    SweepTable table;
    table.axis = spec.axis;
    table.metrics = SweepMetricNames();
    table.seeds = ReplicationSeeds(spec);
    if (spec.workers < 1)
    {
        throw InvalidParameter("sweep: workers must be >= 1");
    }

    std::vector<RunConfig> configs;
    std::vector<std::optional<PowerMap>> maps;
    for (double v : spec.values)
    {
        configs.push_back(WithAxisValue(config, spec.axis, v));
        maps.push_back(ResolvePowerMap(configs.back()));
    }
    if (config.barring.enabled)
    {
        // Warm the optimal-load cache serially.
        for (const auto& c : configs)
        {
            InitialBarringState(c);
        }
    }

    const auto reps = static_cast<std::size_t>(spec.replications);
    std::vector<RunSummary> summaries(configs.size() * reps);
    ParallelFor(summaries.size(), spec.workers, [&](std::size_t i) {
        std::size_t v = i / reps;
        summaries[i] = RunSimulation(configs[v], maps[v], table.seeds[i % reps]).summary;
    });

    for (std::size_t v = 0; v < configs.size(); ++v)
    {
        SweepRow row;
        row.value = spec.values[v];
        row.replications = spec.replications;
        std::size_t k = table.metrics.size();
        row.mean.assign(k, 0.0);
        row.stdError.assign(k, 0.0);
        std::vector<std::vector<double>> samples;
        for (std::size_t r = 0; r < reps; ++r)
        {
            samples.push_back(SummaryValues(summaries[v * reps + r]));
            for (std::size_t j = 0; j < k; ++j)
            {
                row.mean[j] += samples.back()[j];
            }
        }
        for (std::size_t j = 0; j < k; ++j)
        {
            row.mean[j] /= static_cast<double>(reps);
            if (reps > 1)
            {
                double ss = 0.0;
                for (const auto& s : samples)
                {
                    ss += (s[j] - row.mean[j]) * (s[j] - row.mean[j]);
                }
                row.stdError[j] = std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps));
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

RunConfig
DefaultCompareConfig()
{
    RunConfig c;
    c.grid.numLevels = 2;
    c.grid.numRbs = 10;
    c.decodeMode = DecodeMode::CollisionLimited;
    c.scheme = Scheme::SemiGf;
    c.semiGf.thresholdType = ThresholdType::UpperLimit;
    c.semiGf.protocol = SemiGfProtocol{ProtocolKind::Dynamic, 100, 0.6};
    c.semiGf.gbQosSinr = 1.0;
    c.semiGf.gbAvgPower = 4.0;
    c.traffic.activationProb = 1.0;
    c.traffic.placement = Placement::Resample;
    c.powerMap.source = PowerMapConfig::Source::Generate;
    auto& g = c.powerMap.generate;
    g.area = RectangleArea{{0.0, 0.0}, {100.0, 100.0}};
    g.rows = 2;
    g.cols = 2;
    g.bsLocation = {50.0, 50.0};
    g.maxTpl = 5000.0;
    g.channel = ChannelModel{};
    g.channel.blockages.push_back(Blockage{{{60.0, 60.0}, {70.0, 60.0}, {70.0, 70.0}, {60.0, 70.0}}, 0.1});
    c.metrics.perSlot = false;
    c.slots = 20'000;
    c.seed = 1;
    return c;
}

CompareTable
Compare(const RunConfig& config, const std::vector<int>& devices, int replications, int workers)
{
    SweepSpec spec;
    spec.replications = replications;
    spec.baseSeed = config.seed;
    spec.workers = workers;
    for (int n : devices)
    {
        spec.values.push_back(n);
    }
    auto aarOf = [&](Scheme scheme, ProtocolKind protocol) {
        RunConfig c = config;
        c.scheme = scheme;
        c.semiGf.protocol.kind = protocol;
        c.barring.enabled = false;
        std::vector<double> out;
        for (const auto& row : Sweep(c, spec).rows)
        {
            out.push_back(row.mean[0]);
        }
        return out;
    };
    auto gb = aarOf(Scheme::Gb, ProtocolKind::Dynamic);
    auto gf = aarOf(Scheme::Gf, ProtocolKind::Dynamic);
    auto dyn = aarOf(Scheme::SemiGf, ProtocolKind::Dynamic);
    auto open = aarOf(Scheme::SemiGf, ProtocolKind::OpenLoop);

    CompareTable table;
    for (std::size_t i = 0; i < devices.size(); ++i)
    {
        table.rows.push_back(CompareRow{devices[i], gb[i], gf[i], dyn[i], open[i]});
        if (gb[i] > 0.0)
        {
            table.maxGainOverGb = std::max(table.maxGainOverGb, dyn[i] / gb[i] - 1.0);
        }
        if (gf[i] > 0.0)
        {
            table.maxRatioOverGf = std::max(table.maxRatioOverGf, dyn[i] / gf[i]);
        }
    }
    return table;
}

RunConfig
DefaultBarringConfig()
{
    RunConfig c;
    c.grid.numLevels = 4;
    c.grid.numRbs = 10;
    c.decodeMode = DecodeMode::CollisionLimited;
    c.scheme = Scheme::Gf;
    c.traffic.activationProb = 1.0;
    c.barring.enabled = true;
    c.barring.period = 100;
    c.metrics.perSlot = false;
    c.slots = 20'000;
    c.warmupSlots = 10 * c.barring.period;
    c.seed = 1;
    return c;
}

BarringDemoTable
BarringDemo(const RunConfig& config, const std::vector<int>& devices, int replications, int workers)
{
    SweepSpec spec;
    spec.replications = replications;
    spec.baseSeed = config.seed;
    spec.workers = workers;
    for (int n : devices)
    {
        spec.values.push_back(n);
    }
    RunConfig with = config;
    with.barring.enabled = true;
    RunConfig without = config;
    without.barring.enabled = false;
    auto a = Sweep(with, spec);
    auto b = Sweep(without, spec);

    BarringDemoTable table;
    BarringState state = InitialBarringState(with);
    table.optimalLoad = state.optimalLoad;
    table.maxAar = state.maxAar;
    for (std::size_t i = 0; i < devices.size(); ++i)
    {
        table.rows.push_back(
            BarringDemoRow{devices[i], a.rows[i].mean[0], b.rows[i].mean[0], a.rows[i].mean[1], b.rows[i].mean[1]});
    }
    return table;
}

} // namespace mtnoma
