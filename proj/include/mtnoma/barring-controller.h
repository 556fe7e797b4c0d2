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

#ifndef MTNOMA_BARRING_CONTROLLER_H
#define MTNOMA_BARRING_CONTROLLER_H

#include "mtnoma/power-grid.h"
#include "mtnoma/random-streams.h"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mtnoma
{

struct BarringState
{
    /// Probability that a backlogged device transmits in a given slot.
    double rate = 1.0;
    /// Slots per barring period.
    int period = 100;
    int optimalLoad = 1;
    double maxAar = 0.0;
    /// Upper clamp of the load estimate.
    double loadCap = 100.0;
};

void ValidateBarringState(const BarringState& state);

struct PeriodObservation
{
    /// Fraction of (slot, RB) pairs with no GF transmission.
    double idleRbFraction = 1.0;
    double successesPerSlot = 0.0;
    int slots = 1;
};

/**
 * Inverts the idle-RB statistic: with backlog B and per-slot transmit
 * probability q an RB is idle with probability (1 - q/M)^B, so
 * B = ln f / ln(1 - q/M). f is clamped to [1/(slots*M), 1] first and the result
 * to [0, loadCap]. q = 0 yields loadCap.
 */
double EstimateLoad(const PeriodObservation& obs, double rate, int numRbs, double loadCap);

/// min(1, n* / max(nHat, 1)).
double UpdateRate(double nHat, const BarringState& state);

/// One barring draw: true (transmit) iff u < q, u uniform in [0, 1). Always
/// consumes exactly one draw.
inline bool
PassesBarring(double rate, Engine& rng)
{
    return UniformUnit(rng) < rate;
}

struct BarringSplit
{
    std::vector<DeviceId> active;
    std::vector<DeviceId> barred;
};

BarringSplit ApplyBarring(std::span<const DeviceId> backlogged, double rate, Engine& rng);

struct PeriodRecord
{
    int index = 0;
    std::int64_t startSlot = 0;
    int slots = 0;
    /// Rate in force during the period and the one chosen for the next.
    double rate = 1.0;
    double nextRate = 1.0;
    double idleRbFraction = 1.0;
    double loadEstimate = 0.0;
    double successesPerSlot = 0.0;
    /// Filled by the simulation engine.
    double meanTransmitters = 0.0;
};

/**
 * The per-cell barring loop. RecordSlot aggregates one slot's RB occupancy;
 * once `period` slots are in, EndPeriod estimates the load and sets the next
 * rate. Operations() counts elementary estimator/update steps, which depend on
 * the period and M only.
 */
class BarringController
{
  public:
    BarringController(BarringState state, int numRbs);

    double Rate() const
    {
        return m_state.rate;
    }

    const BarringState& State() const
    {
        return m_state;
    }

    /// rbBusy has one flag per RB: nonzero when some GF device transmitted.
    void RecordSlot(std::span<const char> rbBusy, int successes);

    bool PeriodComplete() const
    {
        return m_slots >= m_state.period;
    }

    /// oracleLoad replaces the estimate when given.
    PeriodRecord EndPeriod(std::optional<double> oracleLoad = std::nullopt);

    std::uint64_t Operations() const
    {
        return m_operations;
    }

  private:
    BarringState m_state;
    int m_numRbs;
    int m_slots = 0;
    std::int64_t m_idle = 0;
    std::int64_t m_successes = 0;
    std::int64_t m_slotsSeen = 0;
    int m_periods = 0;
    std::uint64_t m_operations = 0;
};

} // namespace mtnoma

#endif // MTNOMA_BARRING_CONTROLLER_H
