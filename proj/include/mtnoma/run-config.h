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

#ifndef MTNOMA_RUN_CONFIG_H
#define MTNOMA_RUN_CONFIG_H

#include "mtnoma/aar-analytics.h"
#include "mtnoma/access-protocols.h"
#include "mtnoma/power-map.h"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace mtnoma
{

std::string_view Version();

enum class Scheme
{
    Gb,
    Gf,
    SemiGf,
};

std::string_view ToString(Scheme scheme);
Scheme ParseScheme(std::string_view text);

struct GridConfig
{
    int numLevels = 2;
    int numRbs = 10;
    double targetSinr = 1.0;
    double noisePower = 1.0;
    double margin = 1.0;

    PowerGrid Build() const
    {
        return MakePowerGrid(numLevels, numRbs, targetSinr, noisePower, margin);
    }

    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct SemiGfConfig
{
    ThresholdType thresholdType = ThresholdType::UpperLimit;
    SemiGfProtocol protocol{ProtocolKind::Dynamic, 100, 0.6};
    double gbQosSinr = 1.0;
    double gbAvgPower = 4.0;

    friend bool operator==(const SemiGfConfig& a, const SemiGfConfig& b)
    {
        return a.thresholdType == b.thresholdType && a.protocol.kind == b.protocol.kind &&
               a.protocol.estimationWindow == b.protocol.estimationWindow &&
               a.protocol.violationProb == b.protocol.violationProb && a.gbQosSinr == b.gbQosSinr &&
               a.gbAvgPower == b.gbAvgPower;
    }
};

enum class TrafficKind
{
    Bernoulli,
    Burst,
};

enum class Placement
{
    /// Each GF device draws its region once per run.
    Fixed,
    /// Each GF device draws its region again in every slot it is active.
    Resample,
};

struct TrafficConfig
{
    TrafficKind kind = TrafficKind::Bernoulli;
    int devices = 1;
    /// Per idle device per slot; 1 keeps every device backlogged.
    double activationProb = 1.0;
    int maxAttempts = 50;
    std::int64_t burstSlot = 0;
    double burstFraction = 1.0;
    double backgroundProb = 0.0;
    Placement placement = Placement::Fixed;

    friend bool operator==(const TrafficConfig&, const TrafficConfig&) = default;
};

enum class LoadEstimator
{
    IdleFraction,
    /// The true backlog; for controller studies only.
    Oracle,
};

struct BarringConfig
{
    bool enabled = false;
    int period = 100;
    /// 0 selects 100 * n*.
    double loadCap = 0.0;
    /// Upper end of the optimal-load search; 0 selects max(20, 4 * N * M).
    int searchMax = 0;
    LoadEstimator estimator = LoadEstimator::IdleFraction;

    friend bool operator==(const BarringConfig&, const BarringConfig&) = default;
};

struct GenerateSpec
{
    Area area = RectangleArea{{0.0, 0.0}, {100.0, 100.0}};
    int rows = 2;
    int cols = 2;
    ChannelModel channel;
    Point bsLocation{50.0, 50.0};
    double maxTpl = 5000.0;

    friend bool operator==(const GenerateSpec&, const GenerateSpec&) = default;
};

struct PowerMapConfig
{
    enum class Source
    {
        None,
        Inline,
        File,
        Generate,
    };

    Source source = Source::None;
    std::optional<PowerMap> inlineMap;
    std::string path;
    GenerateSpec generate;

    friend bool operator==(const PowerMapConfig&, const PowerMapConfig&) = default;
};

struct MetricsConfig
{
    /// Windowed-AAR length; 0 selects the barring period when barring is on,
    /// else 100.
    int window = 0;
    bool perSlot = true;

    friend bool operator==(const MetricsConfig&, const MetricsConfig&) = default;
};

struct RunConfig
{
    GridConfig grid;
    DecodeMode decodeMode = DecodeMode::CollisionLimited;
    Scheme scheme = Scheme::Gf;
    SemiGfConfig semiGf;
    TrafficConfig traffic;
    BarringConfig barring;
    PowerMapConfig powerMap;
    MetricsConfig metrics;
    std::int64_t slots = 100'000;
    /// Leading slots excluded from the run summary.
    std::int64_t warmupSlots = 0;
    std::uint64_t seed = 1;

    int EffectiveWindow() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/**
 * Parses and validates a configuration document, applying defaults. Throws
 * ConfigError naming the dotted key for unknown keys, type mismatches,
 * invariant violations and cross-field inconsistencies.
 */
RunConfig ParseConfig(const nlohmann::json& doc);
RunConfig ParseConfigText(std::string_view text);
RunConfig LoadConfigFile(const std::string& path);

/// The resolved configuration with every default spelled out; parses back
/// to an equal RunConfig.
nlohmann::json ToJson(const RunConfig& config);

/// Sets a dotted key ("traffic.devices") in a configuration document,
/// creating intermediate objects. The value text is parsed as JSON when
/// possible and taken as a string otherwise.
/// Parses the text as JSON when it is valid JSON, else stores it as a string.
void SetConfigText(nlohmann::json& doc, std::string_view dottedKey, std::string_view valueText);
void SetConfigValue(nlohmann::json& doc, std::string_view dottedKey, const nlohmann::json& value);

/// Loads, generates or returns the configured map; nullopt for source none.
std::optional<PowerMap> ResolvePowerMap(const RunConfig& config);

} // namespace mtnoma

#endif // MTNOMA_RUN_CONFIG_H
