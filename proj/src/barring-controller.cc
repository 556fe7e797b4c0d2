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

#include "mtnoma/barring-controller.h"

#include "mtnoma/errors.h"

#include <algorithm>
#include <cmath>

namespace mtnoma
{

namespace
{

// Arithmetic steps of one EndPeriod call (fraction, clamp, two logs,
// division, clamp, rate update, reset).
constexpr std::uint64_t kEndPeriodOperations = 8;

} // namespace

void
ValidateBarringState(const BarringState& state)
{
    if (!(state.rate >= 0.0 && state.rate <= 1.0))
    {
        throw InvalidParameter("barring: rate must lie in [0, 1]");
    }
    if (state.period < 1)
    {
        throw InvalidParameter("barring: period must be >= 1");
    }
    if (state.optimalLoad < 1)
    {
        throw InvalidParameter("barring: optimal load must be >= 1");
    }
    if (!(state.loadCap >= 1.0))
    {
        throw InvalidParameter("barring: load cap must be >= 1");
    }
}

double
EstimateLoad(const PeriodObservation& obs, double rate, int numRbs, double loadCap)
{
    if (numRbs < 1 || obs.slots < 1)
    {
        throw InvalidParameter("load estimate: M and slots must be >= 1");
    }
    if (rate <= 0.0)
    {
        return loadCap;
    }
    double fMin = 1.0 / (static_cast<double>(obs.slots) * numRbs);
    double f = std::clamp(obs.idleRbFraction, fMin, 1.0);
    double p = std::min(rate, 1.0) / numRbs;
    if (p >= 1.0)
    {
        // Every transmitter hits the single RB: idle only without backlog.
        return f >= 1.0 ? 0.0 : loadCap;
    }
    double nHat = std::log(f) / std::log1p(-p);
    return std::clamp(nHat, 0.0, loadCap);
}

double
UpdateRate(double nHat, const BarringState& state)
{
    if (!(nHat >= 0.0))
    {
        throw InvalidParameter("rate update: load estimate must be >= 0");
    }
    return std::min(1.0, state.optimalLoad / std::max(nHat, 1.0));
}

BarringSplit
ApplyBarring(std::span<const DeviceId> backlogged, double rate, Engine& rng)
{
    if (!(rate >= 0.0 && rate <= 1.0))
    {
        throw InvalidParameter("barring: rate must lie in [0, 1]");
    }
    BarringSplit split;
    for (DeviceId d : backlogged)
    {
        (PassesBarring(rate, rng) ? split.active : split.barred).push_back(d);
    }
    return split;
}

BarringController::BarringController(BarringState state, int numRbs)
    : m_state(state),
      m_numRbs(numRbs)
{
    ValidateBarringState(state);
    if (numRbs < 1)
    {
        throw InvalidParameter("barring: M must be >= 1");
    }
}

void
BarringController::RecordSlot(std::span<const char> rbBusy, int successes)
{
    if (static_cast<int>(rbBusy.size()) != m_numRbs)
    {
        throw InvalidInput("barring: slot observation must cover every RB");
    }
    for (char busy : rbBusy)
    {
        m_idle += busy ? 0 : 1;
    }
    m_successes += successes;
    ++m_slots;
    m_operations += static_cast<std::uint64_t>(m_numRbs) + 1;
}

PeriodRecord
BarringController::EndPeriod(std::optional<double> oracleLoad)
{
    if (m_slots == 0)
    {
        throw InvalidInput("barring: period ended without observations");
    }
    PeriodRecord rec;
    rec.index = m_periods;
    rec.startSlot = m_slotsSeen;
    rec.slots = m_slots;
    rec.rate = m_state.rate;

    PeriodObservation obs;
    obs.slots = m_slots;
    obs.idleRbFraction = static_cast<double>(m_idle) / (static_cast<double>(m_slots) * m_numRbs);
    obs.successesPerSlot = static_cast<double>(m_successes) / m_slots;

    rec.idleRbFraction = obs.idleRbFraction;
    rec.successesPerSlot = obs.successesPerSlot;
    rec.loadEstimate = oracleLoad ? std::clamp(*oracleLoad, 0.0, m_state.loadCap)
                                  : EstimateLoad(obs, m_state.rate, m_numRbs, m_state.loadCap);
    m_state.rate = UpdateRate(rec.loadEstimate, m_state);
    rec.nextRate = m_state.rate;

    m_slotsSeen += m_slots;
    ++m_periods;
    m_slots = 0;
    m_idle = 0;
    m_successes = 0;
    m_operations += kEndPeriodOperations;
    return rec;
}

} // namespace mtnoma
