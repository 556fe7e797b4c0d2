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

#ifndef MTNOMA_ACCESS_PROTOCOLS_H
#define MTNOMA_ACCESS_PROTOCOLS_H

#include "mtnoma/aar-analytics.h"
#include "mtnoma/parallel.h"
#include "mtnoma/power-grid.h"
#include "mtnoma/power-map.h"
#include "mtnoma/random-streams.h"

#include <climits>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mtnoma
{

/// LowerLimit keeps grant-free devices above the grant-based signal (GB decoded
/// last); UpperLimit keeps them below its tolerable interference (GB first).
enum class ThresholdType
{
    LowerLimit,
    UpperLimit,
};

enum class ProtocolKind
{
    /// Threshold from a windowed average of the GB power; outages possible.
    OpenLoop,
    /// Threshold from the instantaneous GB power; no outage.
    Dynamic,
};

struct SemiGfProtocol
{
    ProtocolKind kind = ProtocolKind::Dynamic;
    int estimationWindow = 100;
    double violationProb = 0.0;
};

std::string_view ToString(ThresholdType type);
std::string_view ToString(ProtocolKind kind);
/// "lower_limit" / "upper_limit"; throws InvalidParameter otherwise.
ThresholdType ParseThresholdType(std::string_view text);
/// "open_loop" / "dynamic"; throws InvalidParameter otherwise.
ProtocolKind ParseProtocolKind(std::string_view text);

/// Threshold used when no GB device occupies the RB: every level is allowed.
inline constexpr int kUnboundedUpper = INT_MAX;

/**
 * UpperLimit: largest level with P_i <= gbPower / qosSinr - noise.
 * LowerLimit: smallest level with P_i >= gbPower.
 * nullopt means no level is admissible (no GF device may join).
 */
std::optional<int> ComputeThreshold(double gbPower,
                                    double qosSinr,
                                    double noise,
                                    std::span<const double> levels,
                                    ThresholdType type);

/// kUnboundedUpper for UpperLimit, 0 for LowerLimit.
int NoGbThreshold(ThresholdType type);

/// Whether a GF device may target `level` under the given threshold.
bool LevelAllowed(int level, std::optional<int> threshold, ThresholdType type);

/// Drops every pool entry whose level breaks the threshold.
PowerMap PrunePowerMap(const PowerMap& map, std::optional<int> threshold, ThresholdType type);

/// Grant-based baseline: one dedicated RB per scheduled device.
int SlotGb(int n, int numRbs);

/**
 * Two-point multiplicative fading of the GB received power with unit mean.
 * The `violating` factor moves the instantaneous threshold off the one
 * computed from the average power and occurs with probability violationProb.
 */
struct TwoPointFading
{
    double violating = 1.0;
    double nominal = 1.0;
    double violationProb = 0.0;

    double Draw(Engine& rng) const
    {
        return UniformUnit(rng) < violationProb ? violating : nominal;
    }
};

/// UpperLimit puts the violating power's I_max midway between the average
/// threshold level and the one below; LowerLimit puts it midway between the
/// average threshold level and the one above. Throws InvalidParameter when no
/// unit-mean two-point law exists for the inputs.
TwoPointFading CalibrateTwoPointFading(double averagePower,
                                       double qosSinr,
                                       double noise,
                                       std::span<const double> levels,
                                       ThresholdType type,
                                       double violationProb);

/// Sliding mean over the last `window` samples, pre-filled with `initial`.
class WindowedMean
{
  public:
    WindowedMean(int window, double initial);

    void Add(double sample);

    double Value() const
    {
        return m_sum / static_cast<double>(m_buffer.size());
    }

  private:
    std::vector<double> m_buffer;
    std::size_t m_next = 0;
    double m_sum = 0.0;
    std::size_t m_sinceRefresh = 0;
};

/// The grant-based device of one RB in one slot.
struct GbState
{
    int rb = 0;
    DeviceId device = 0;
    double instantaneousPower = 0.0;
    /// Power the threshold is computed from under OpenLoop.
    double averagePower = 0.0;
    double qosSinr = 1.0;
};

/// region indexes map.regions; -1 means the full level set at unit gain.
struct GfContender
{
    DeviceId device = 0;
    int region = -1;
};

struct SlotResult
{
    /// Per RB.
    std::vector<char> gbPresent;
    std::vector<char> gbSuccess;
    std::vector<char> gbOutage;
    std::vector<char> gfBusy;

    std::vector<DeviceId> gfSuccesses;
    std::vector<DeviceId> gfFailures;
    /// Contenders whose pruned pool was void.
    std::vector<DeviceId> gfSilent;

    /// GF transmitters that shared their PD-RB with another GF transmitter.
    int collisions = 0;
    int admittedGf = 0;
    /// Sum of GF transmit power levels.
    double gfEnergy = 0.0;

    void Reset(int numRbs);
};

/**
 * Per-slot GF and semi-GF processing with reusable scratch buffers. Selection
 * draws run sequentially in contender order; the per-RB decode stage is spread
 * over `workers` threads and merged in RB order, so results do not depend on
 * the worker count.
 *
 * In SINR mode GF received powers are the target level times a log-normal
 * shadowing draw when the map's channel model has a positive spread.
 */
class AccessSlot
{
  public:
    AccessSlot(const PowerGrid& grid, DecodeMode mode, const PowerMap* map = nullptr, int workers = 1);
    ~AccessSlot();

    const SlotResult& RunGf(std::span<const GfContender> contenders, Engine& selectRng, Engine& shadowRng);

    const SlotResult& RunSemiGf(std::span<const GbState> gb,
                                std::span<const GfContender> contenders,
                                ThresholdType type,
                                ProtocolKind protocol,
                                Engine& selectRng,
                                Engine& shadowRng);

  private:
    struct Transmission
    {
        DeviceId device;
        int level;
        double tpl;
        double power;
    };

    struct RbWork
    {
        std::vector<Transmission> gf;
        std::vector<int> counts;
        std::vector<SicSignal> signals;
        DecodeOutcome outcome;
        std::vector<DeviceId> succeeded;
        std::vector<DeviceId> failed;
        const GbState* gb = nullptr;
        std::optional<int> threshold;
        std::optional<int> instantThreshold;
        bool outage = false;
        bool gbSuccess = false;
        int collisions = 0;
    };

    void Select(std::span<const GfContender> contenders,
                const std::vector<std::optional<int>>* thresholds,
                ThresholdType type,
                Engine& selectRng,
                Engine& shadowRng);
    void DecodeAll(ThresholdType type);
    void DecodeRb(RbWork& work, ThresholdType type) const;
    double Shadowing(Engine& rng) const;

    PowerGrid m_grid;
    DecodeMode m_mode;
    const PowerMap* m_map;
    std::vector<PowerPool> m_unitPool;
    std::unique_ptr<WorkerPool> m_pool;
    std::vector<RbWork> m_work;
    std::vector<int> m_ranges;
    SlotResult m_result;
};

/// One-shot wrappers around AccessSlot.
SlotResult SlotGf(std::span<const GfContender> contenders,
                  const PowerGrid& grid,
                  const PowerMap* map,
                  DecodeMode mode,
                  Engine& rng);

SlotResult SlotSemiGf(std::span<const GbState> gb,
                      std::span<const GfContender> contenders,
                      const PowerMap* map,
                      ThresholdType type,
                      ProtocolKind protocol,
                      const PowerGrid& grid,
                      DecodeMode mode,
                      Engine& rng);

} // namespace mtnoma

#endif // MTNOMA_ACCESS_PROTOCOLS_H
