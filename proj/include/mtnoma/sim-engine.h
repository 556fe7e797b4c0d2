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

#ifndef MTNOMA_SIM_ENGINE_H
#define MTNOMA_SIM_ENGINE_H

#include "mtnoma/aar-analytics.h"
#include "mtnoma/barring-controller.h"
#include "mtnoma/run-config.h"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtnoma
{

struct SlotRecord
{
    std::int64_t slot = 0;
    /// Devices holding a packet at the start of the slot.
    int backlogged = 0;
    /// Backlogged devices that attempted access (not barred or unscheduled).
    int active = 0;
    int transmitters = 0;
    int successes = 0;
    int failures = 0;
    /// Active GF devices whose pruned pool was void.
    int silent = 0;
    int collisions = 0;
    int gbPresent = 0;
    int gbSuccesses = 0;
    int gbOutages = 0;
    int dropped = 0;
    double energy = 0.0;

    friend bool operator==(const SlotRecord&, const SlotRecord&) = default;
};

struct WindowRecord
{
    std::int64_t startSlot = 0;
    int slots = 0;
    double aar = 0.0;

    friend bool operator==(const WindowRecord&, const WindowRecord&) = default;
};

/// Averages over the slots after warm-up.
struct RunSummary
{
    std::int64_t slots = 0;
    double aar = 0.0;
    double aarStdError = 0.0;
    /// Mean transmitters per slot.
    double systemLoad = 0.0;
    double meanBacklog = 0.0;
    double gbOutageRate = 0.0;
    /// Colliding GF transmitters per GF transmission.
    double collisionRate = 0.0;
    double energyPerSuccess = 0.0;
    double droppedPerSlot = 0.0;
    std::int64_t successes = 0;
    std::int64_t transmissions = 0;
    std::int64_t dropped = 0;

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct MetricsSeries
{
    std::uint64_t seed = 0;
    int window = 100;
    std::vector<SlotRecord> slots;
    std::vector<WindowRecord> windows;
    std::vector<PeriodRecord> periods;
    std::optional<OptimalLoadResult> optimalLoad;
    RunSummary summary;
};

bool operator==(const PeriodRecord& a, const PeriodRecord& b);
bool operator==(const MetricsSeries& a, const MetricsSeries& b);

struct SimOptions
{
    /// Threads for the per-RB decode stage; never changes results.
    int workers = 1;
};

/**
 * Runs the slot loop: traffic update, optional barring gate, protocol slot,
 * decode, metrics; the barring controller closes a period every
 * barring.period slots. Identical (config, seed) give identical series.
 */
MetricsSeries RunSimulation(const RunConfig& config, std::uint64_t seed, const SimOptions& options = {});

/// Same, with an already resolved power map (skips file reads/generation).
MetricsSeries RunSimulation(const RunConfig& config,
                            const std::optional<PowerMap>& map,
                            std::uint64_t seed,
                            const SimOptions& options = {});

/// Optimal load and cap the barring controller would use for the config.
BarringState InitialBarringState(const RunConfig& config);

// ---------------------------------------------------------------------------

/// Summary fields aggregated by sweeps, in column order.
const std::vector<std::string>& SweepMetricNames();
std::vector<double> SummaryValues(const RunSummary& summary);

struct SweepSpec
{
    std::string axis = "traffic.devices";
    std::vector<double> values;
    int replications = 1;
    std::uint64_t baseSeed = 1;
    /// When non-empty, used instead of baseSeed ^ index (one per replication).
    std::vector<std::uint64_t> seeds;
    int workers = 1;
};

struct SweepRow
{
    double value = 0.0;
    int replications = 0;
    std::vector<double> mean;
    std::vector<double> stdError;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepTable
{
    std::string axis;
    std::vector<std::string> metrics;
    std::vector<std::uint64_t> seeds;
    std::vector<SweepRow> rows;

    friend bool operator==(const SweepTable&, const SweepTable&) = default;
};

/// Seeds used for each replication.
std::vector<std::uint64_t> ReplicationSeeds(const SweepSpec& spec);

/// Applies an axis value to a configuration through its document form.
RunConfig WithAxisValue(const RunConfig& config, const std::string& axis, double value);

/// Runs every (value, replication) pair, in parallel over spec.workers, and
/// aggregates in axis order. Replications share seeds across axis values.
SweepTable Sweep(const RunConfig& config, const SweepSpec& spec);

// ---------------------------------------------------------------------------

struct CompareRow
{
    int devices = 0;
    double gb = 0.0;
    double gf = 0.0;
    double semiDynamic = 0.0;
    double semiOpenLoop = 0.0;
};

struct CompareTable
{
    std::vector<CompareRow> rows;
    /// max over n of semi(n)/gb(n) - 1 and of semi(n)/gf(n).
    double maxGainOverGb = 0.0;
    double maxRatioOverGf = 0.0;
};

/// Default scenario for the scheme comparison: M=10, N=2, collision-limited,
/// upper-limit threshold with violation probability 0.6, a 2x2 region map
/// with one region behind a blockage, GF regions redrawn every slot.
RunConfig DefaultCompareConfig();

/// Runs GB, GF and semi-GF (dynamic and open-loop) on the device counts with
/// shared seeds; every other field comes from `config`.
CompareTable Compare(const RunConfig& config, const std::vector<int>& devices, int replications, int workers);

struct BarringDemoRow
{
    int devices = 0;
    double aarWith = 0.0;
    double aarWithout = 0.0;
    double loadWith = 0.0;
    double loadWithout = 0.0;
};

struct BarringDemoTable
{
    int optimalLoad = 0;
    double maxAar = 0.0;
    std::vector<BarringDemoRow> rows;
};

/// Default barring scenario: M=10, N=4, collision-limited GF with every
/// device backlogged, 50-slot periods, 10 warm-up periods.
RunConfig DefaultBarringConfig();

BarringDemoTable BarringDemo(const RunConfig& config, const std::vector<int>& devices, int replications, int workers);

} // namespace mtnoma

#endif // MTNOMA_SIM_ENGINE_H
