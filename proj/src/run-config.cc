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

#include "mtnoma/run-config.h"

#include "mtnoma/errors.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#ifndef MTNOMA_VERSION
#define MTNOMA_VERSION "0.0.0"
#endif

namespace mtnoma
{

using nlohmann::json;

namespace
{

std::string
Join(const std::string& path, std::string_view key)
{
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

/// Typed, key-checked access to one object of the document.
class ObjectReader
{
  public:
    ObjectReader(const json& j, std::string path, std::initializer_list<std::string_view> allowed)
        : m_json(j),
          m_path(std::move(path))
    {
        if (!j.is_object())
        {
            throw ConfigError(m_path.empty() ? "<document>" : m_path, "expected an object");
        }
        for (const auto& [key, value] : j.items())
        {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            {
                throw ConfigError(Join(m_path, key), "unknown key");
            }
        }
    }

    bool Has(std::string_view key) const
    {
        return m_json.contains(std::string(key));
    }

    const json& At(std::string_view key) const
    {
        return m_json.at(std::string(key));
    }

    std::string Key(std::string_view key) const
    {
        return Join(m_path, key);
    }

    double Number(std::string_view key, double def) const
    {
        if (!Has(key))
        {
            return def;
        }
        const json& v = At(key);
        if (!v.is_number())
        {
            throw ConfigError(Key(key), "expected a number");
        }
        return v.get<double>();
    }

    std::int64_t Integer(std::string_view key, std::int64_t def) const
    {
        if (!Has(key))
        {
            return def;
        }
        const json& v = At(key);
        if (v.is_number_integer())
        {
            return v.get<std::int64_t>();
        }
        if (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<std::int64_t>(v.get<double>())))
        {
            return static_cast<std::int64_t>(v.get<double>());
        }
        throw ConfigError(Key(key), "expected an integer");
    }

    int Int(std::string_view key, int def) const
    {
        std::int64_t v = Integer(key, def);
        if (v < INT_MIN || v > INT_MAX)
        {
            throw ConfigError(Key(key), "integer out of range");
        }
        return static_cast<int>(v);
    }

    std::uint64_t Unsigned(std::string_view key, std::uint64_t def) const
    {
        if (!Has(key))
        {
            return def;
        }
        const json& v = At(key);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        {
            throw ConfigError(Key(key), "expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    bool Bool(std::string_view key, bool def) const
    {
        if (!Has(key))
        {
            return def;
        }
        const json& v = At(key);
        if (!v.is_boolean())
        {
            throw ConfigError(Key(key), "expected true or false");
        }
        return v.get<bool>();
    }

    std::string String(std::string_view key, std::string def) const
    {
        if (!Has(key))
        {
            return def;
        }
        const json& v = At(key);
        if (!v.is_string())
        {
            throw ConfigError(Key(key), "expected a string");
        }
        return v.get<std::string>();
    }

  private:
    const json& m_json;
    std::string m_path;
};

void
Require(bool ok, const std::string& key, const std::string& constraint)
{
    if (!ok)
    {
        throw ConfigError(key, "must satisfy " + constraint);
    }
}

template <typename F>
auto
Enum(const ObjectReader& r, std::string_view key, std::string def, F parse)
{
    std::string text = r.String(key, std::move(def));
    try
    {
        return parse(text);
    }
    catch (const InvalidParameter& e)
    {
        throw ConfigError(r.Key(key), e.what());
    }
}

Point
ReadPoint(const json& j, const std::string& key)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    {
        throw ConfigError(key, "expected [x, y]");
    }
    return Point{j[0].get<double>(), j[1].get<double>()};
}

ChannelModel
ReadChannel(const json& j, const std::string& key)
{
    ObjectReader r(j,
                   key,
                   {"ref_distance", "ref_gain", "path_loss_exponent", "blockages", "sector_gains", "shadowing_sigma_db"});
    try
    {
        return ChannelModelFromJson(j);
    }
    catch (const std::exception& e)
    {
        throw ConfigError(key, e.what());
    }
}

Area
ReadArea(const json& j, const std::string& key)
{
    ObjectReader r(j, key, {"kind", "min", "max", "center", "radius"});
    std::string kind = r.String("kind", "rectangle");
    if (kind == "rectangle")
    {
        RectangleArea a;
        if (r.Has("min"))
        {
            a.min = ReadPoint(r.At("min"), r.Key("min"));
        }
        a.max = r.Has("max") ? ReadPoint(r.At("max"), r.Key("max")) : Point{100.0, 100.0};
        Require(a.max.x > a.min.x && a.max.y > a.min.y, r.Key("max"), "max > min in both coordinates");
        return a;
    }
    if (kind == "disk")
    {
        DiskArea d;
        if (r.Has("center"))
        {
            d.center = ReadPoint(r.At("center"), r.Key("center"));
        }
        d.radius = r.Number("radius", 50.0);
        Require(d.radius > 0.0, r.Key("radius"), "radius > 0");
        return d;
    }
    throw ConfigError(r.Key("kind"), "expected rectangle or disk");
}

json
AreaToJson(const Area& area)
{
    if (const auto* d = std::get_if<DiskArea>(&area))
    {
        return {{"kind", "disk"}, {"center", {d->center.x, d->center.y}}, {"radius", d->radius}};
    }
    const auto& r = std::get<RectangleArea>(area);
    return {{"kind", "rectangle"}, {"min", {r.min.x, r.min.y}}, {"max", {r.max.x, r.max.y}}};
}

void
CheckMapGrid(const PowerMap& map, const GridConfig& grid, const std::string& key)
{
    PowerGrid g = grid.Build();
    if (map.grid.levels != g.levels || map.grid.numRbs != g.numRbs)
    {
        throw ConfigError(key, "power map was built for a different grid");
    }
}

} // namespace

std::string_view
Version()
{
    return MTNOMA_VERSION;
}

std::string_view
ToString(Scheme scheme)
{
    switch (scheme)
    {
    case Scheme::Gb:
        return "gb";
    case Scheme::Gf:
        return "gf";
    case Scheme::SemiGf:
        return "semi_gf";
    }
    return "gf";
}

Scheme
ParseScheme(std::string_view text)
{
    if (text == "gb")
    {
        return Scheme::Gb;
    }
    if (text == "gf")
    {
        return Scheme::Gf;
    }
    if (text == "semi_gf")
    {
        return Scheme::SemiGf;
    }
    throw InvalidParameter("unknown scheme '" + std::string(text) + "' (expected gb, gf or semi_gf)");
}

int
RunConfig::EffectiveWindow() const
{
    if (metrics.window > 0)
    {
        return metrics.window;
    }
    return barring.enabled ? barring.period : 100;
}

RunConfig
ParseConfig(const json& doc)
{
    ObjectReader root(doc,
                      "",
                      {"grid",
                       "N",
                       "M",
                       "decode_mode",
                       "scheme",
                       "semi_gf",
                       "traffic",
                       "barring",
                       "power_map",
                       "metrics",
                       "slots",
                       "warmup_slots",
                       "seed"});
    RunConfig c;

    // Grid, with top-level N/M accepted as shorthands.
    {
        json empty = json::object();
        ObjectReader g(root.Has("grid") ? root.At("grid") : empty,
                       "grid",
                       {"N", "M", "target_sinr", "noise_power", "margin"});
        c.grid.numLevels = g.Int("N", c.grid.numLevels);
        c.grid.numRbs = g.Int("M", c.grid.numRbs);
        for (const char* alias : {"N", "M"})
        {
            if (!root.Has(alias))
            {
                continue;
            }
            int v = root.Int(alias, 0);
            if (g.Has(alias) && g.Int(alias, 0) != v)
            {
                throw ConfigError(alias, std::string("conflicts with grid.") + alias);
            }
            (alias[0] == 'N' ? c.grid.numLevels : c.grid.numRbs) = v;
        }
        c.grid.targetSinr = g.Number("target_sinr", c.grid.targetSinr);
        c.grid.noisePower = g.Number("noise_power", c.grid.noisePower);
        c.grid.margin = g.Number("margin", c.grid.margin);
        Require(c.grid.numLevels >= 1, "grid.N", "grid.N ≥ 1");
        Require(c.grid.numLevels <= 64, "grid.N", "grid.N ≤ 64");
        Require(c.grid.numRbs >= 1, "grid.M", "grid.M ≥ 1");
        Require(c.grid.targetSinr > 0.0, "grid.target_sinr", "grid.target_sinr > 0");
        Require(c.grid.noisePower > 0.0, "grid.noise_power", "grid.noise_power > 0");
        Require(c.grid.margin >= 1.0, "grid.margin", "grid.margin ≥ 1");
    }

    c.decodeMode = Enum(root, "decode_mode", "collision_limited", ParseDecodeMode);
    c.scheme = Enum(root, "scheme", "gf", ParseScheme);

    if (root.Has("semi_gf"))
    {
        ObjectReader s(root.At("semi_gf"),
                       "semi_gf",
                       {"threshold_type",
                        "protocol",
                        "violation_prob",
                        "estimation_window",
                        "gb_qos_sinr",
                        "gb_avg_power"});
        c.semiGf.thresholdType = Enum(s, "threshold_type", "upper_limit", ParseThresholdType);
        c.semiGf.protocol.kind = Enum(s, "protocol", "dynamic", ParseProtocolKind);
        c.semiGf.protocol.violationProb = s.Number("violation_prob", c.semiGf.protocol.violationProb);
        c.semiGf.protocol.estimationWindow = s.Int("estimation_window", c.semiGf.protocol.estimationWindow);
        c.semiGf.gbQosSinr = s.Number("gb_qos_sinr", c.semiGf.gbQosSinr);
        c.semiGf.gbAvgPower = s.Number("gb_avg_power", c.semiGf.gbAvgPower);
    }
    {
        const auto& s = c.semiGf;
        Require(s.protocol.violationProb >= 0.0 && s.protocol.violationProb <= 1.0,
                "semi_gf.violation_prob",
                "0 ≤ semi_gf.violation_prob ≤ 1");
        Require(s.protocol.estimationWindow >= 1, "semi_gf.estimation_window", "semi_gf.estimation_window ≥ 1");
        Require(s.gbQosSinr > 0.0, "semi_gf.gb_qos_sinr", "semi_gf.gb_qos_sinr > 0");
        Require(s.gbAvgPower > 0.0, "semi_gf.gb_avg_power", "semi_gf.gb_avg_power > 0");
    }

    if (root.Has("traffic"))
    {
        ObjectReader t(root.At("traffic"),
                       "traffic",
                       {"kind",
                        "devices",
                        "activation_prob",
                        "max_attempts",
                        "burst_slot",
                        "burst_fraction",
                        "background_prob",
                        "placement"});
        c.traffic.kind = Enum(t, "kind", "bernoulli", [](const std::string& k) {
            if (k == "bernoulli")
            {
                return TrafficKind::Bernoulli;
            }
            if (k == "burst")
            {
                return TrafficKind::Burst;
            }
            throw InvalidParameter("expected bernoulli or burst");
        });
        c.traffic.devices = t.Int("devices", c.traffic.devices);
        c.traffic.activationProb = t.Number("activation_prob", c.traffic.activationProb);
        c.traffic.maxAttempts = t.Int("max_attempts", c.traffic.maxAttempts);
        c.traffic.burstSlot = t.Integer("burst_slot", c.traffic.burstSlot);
        c.traffic.burstFraction = t.Number("burst_fraction", c.traffic.burstFraction);
        c.traffic.backgroundProb = t.Number("background_prob", c.traffic.backgroundProb);
        c.traffic.placement = Enum(t, "placement", "fixed", [](const std::string& k) {
            if (k == "fixed")
            {
                return Placement::Fixed;
            }
            if (k == "resample")
            {
                return Placement::Resample;
            }
            throw InvalidParameter("expected fixed or resample");
        });
    }
    {
        const auto& t = c.traffic;
        Require(t.devices >= 1, "traffic.devices", "traffic.devices ≥ 1");
        Require(t.activationProb >= 0.0 && t.activationProb <= 1.0,
                "traffic.activation_prob",
                "0 ≤ traffic.activation_prob ≤ 1");
        Require(t.maxAttempts >= 1, "traffic.max_attempts", "traffic.max_attempts ≥ 1");
        Require(t.burstSlot >= 0, "traffic.burst_slot", "traffic.burst_slot ≥ 0");
        Require(t.burstFraction >= 0.0 && t.burstFraction <= 1.0,
                "traffic.burst_fraction",
                "0 ≤ traffic.burst_fraction ≤ 1");
        Require(t.backgroundProb >= 0.0 && t.backgroundProb <= 1.0,
                "traffic.background_prob",
                "0 ≤ traffic.background_prob ≤ 1");
    }

    if (root.Has("barring"))
    {
        ObjectReader b(root.At("barring"), "barring", {"enabled", "period", "load_cap", "search_max", "estimator"});
        c.barring.enabled = b.Bool("enabled", c.barring.enabled);
        c.barring.period = b.Int("period", c.barring.period);
        c.barring.loadCap = b.Number("load_cap", c.barring.loadCap);
        c.barring.searchMax = b.Int("search_max", c.barring.searchMax);
        c.barring.estimator = Enum(b, "estimator", "idle_fraction", [](const std::string& k) {
            if (k == "idle_fraction")
            {
                return LoadEstimator::IdleFraction;
            }
            if (k == "oracle")
            {
                return LoadEstimator::Oracle;
            }
            throw InvalidParameter("expected idle_fraction or oracle");
        });
    }
    Require(c.barring.period >= 1, "barring.period", "barring.period ≥ 1");
    Require(c.barring.loadCap == 0.0 || c.barring.loadCap >= 1.0, "barring.load_cap", "barring.load_cap = 0 or ≥ 1");
    Require(c.barring.searchMax >= 0, "barring.search_max", "barring.search_max ≥ 0");

    if (root.Has("power_map"))
    {
        ObjectReader p(root.At("power_map"),
                       "power_map",
                       {"source", "map", "path", "area", "grid_rows", "grid_cols", "channel_model", "bs_location",
                        "max_tpl"});
        std::string source = p.String("source", "none");
        if (source == "none")
        {
            c.powerMap.source = PowerMapConfig::Source::None;
        }
        else if (source == "inline")
        {
            c.powerMap.source = PowerMapConfig::Source::Inline;
            if (!p.Has("map"))
            {
                throw ConfigError("power_map.map", "required for source inline");
            }
            try
            {
                c.powerMap.inlineMap = PowerMapFromJson(p.At("map"));
            }
            catch (const std::invalid_argument& e)
            {
                throw ConfigError("power_map.map", e.what());
            }
            CheckMapGrid(*c.powerMap.inlineMap, c.grid, "power_map.map");
        }
        else if (source == "file")
        {
            c.powerMap.source = PowerMapConfig::Source::File;
            c.powerMap.path = p.String("path", "");
            Require(!c.powerMap.path.empty(), "power_map.path", "a path for source file");
            if (!std::filesystem::is_regular_file(c.powerMap.path))
            {
                throw ConfigError("power_map.path", "file not found: " + c.powerMap.path);
            }
        }
        else if (source == "generate")
        {
            c.powerMap.source = PowerMapConfig::Source::Generate;
            auto& g = c.powerMap.generate;
            if (p.Has("area"))
            {
                g.area = ReadArea(p.At("area"), "power_map.area");
            }
            g.rows = p.Int("grid_rows", g.rows);
            g.cols = p.Int("grid_cols", g.cols);
            Require(g.rows >= 1, "power_map.grid_rows", "power_map.grid_rows ≥ 1");
            Require(g.cols >= 1, "power_map.grid_cols", "power_map.grid_cols ≥ 1");
            if (p.Has("channel_model"))
            {
                g.channel = ReadChannel(p.At("channel_model"), "power_map.channel_model");
            }
            if (p.Has("bs_location"))
            {
                g.bsLocation = ReadPoint(p.At("bs_location"), "power_map.bs_location");
            }
            g.maxTpl = p.Number("max_tpl", g.maxTpl);
            Require(g.maxTpl > 0.0, "power_map.max_tpl", "power_map.max_tpl > 0");
        }
        else
        {
            throw ConfigError("power_map.source", "expected none, inline, file or generate");
        }
    }

    if (root.Has("metrics"))
    {
        ObjectReader m(root.At("metrics"), "metrics", {"window", "per_slot"});
        c.metrics.window = m.Int("window", c.metrics.window);
        c.metrics.perSlot = m.Bool("per_slot", c.metrics.perSlot);
    }
    Require(c.metrics.window >= 0, "metrics.window", "metrics.window ≥ 0");

    c.slots = root.Integer("slots", c.slots);
    c.warmupSlots = root.Integer("warmup_slots", c.warmupSlots);
    c.seed = root.Unsigned("seed", c.seed);
    Require(c.slots >= 1, "slots", "slots ≥ 1");
    Require(c.warmupSlots >= 0 && c.warmupSlots < c.slots, "warmup_slots", "0 ≤ warmup_slots < slots");

    // Cross-field rules.
    if (c.scheme == Scheme::SemiGf)
    {
        if (c.powerMap.source == PowerMapConfig::Source::None)
        {
            throw ConfigError("power_map", "scheme semi_gf requires a power map source");
        }
        try
        {
            PowerGrid grid = c.grid.Build();
            CalibrateTwoPointFading(c.semiGf.gbAvgPower,
                                    c.semiGf.gbQosSinr,
                                    grid.noisePower,
                                    grid.levels,
                                    c.semiGf.thresholdType,
                                    c.semiGf.protocol.violationProb);
        }
        catch (const InvalidParameter& e)
        {
            throw ConfigError("semi_gf", e.what());
        }
    }
    if (c.scheme == Scheme::Gb && c.barring.enabled)
    {
        throw ConfigError("barring.enabled", "barring applies to the gf and semi_gf schemes");
    }
    return c;
}

RunConfig
ParseConfigText(std::string_view text)
{
    json doc;
    try
    {
        doc = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError("<document>", e.what());
    }
    return ParseConfig(doc);
}

RunConfig
LoadConfigFile(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError("cannot open config file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ParseConfigText(ss.str());
}

json
ToJson(const RunConfig& c)
{
    json pm;
    switch (c.powerMap.source)
    {
    case PowerMapConfig::Source::None:
        pm = {{"source", "none"}};
        break;
    case PowerMapConfig::Source::Inline:
        pm = {{"source", "inline"}, {"map", ToJson(*c.powerMap.inlineMap)}};
        break;
    case PowerMapConfig::Source::File:
        pm = {{"source", "file"}, {"path", c.powerMap.path}};
        break;
    case PowerMapConfig::Source::Generate: {
        const auto& g = c.powerMap.generate;
        pm = {{"source", "generate"},
              {"area", AreaToJson(g.area)},
              {"grid_rows", g.rows},
              {"grid_cols", g.cols},
              {"channel_model", ToJson(g.channel)},
              {"bs_location", {g.bsLocation.x, g.bsLocation.y}},
              {"max_tpl", g.maxTpl}};
        break;
    }
    }
    return {
        {"grid",
         {{"N", c.grid.numLevels},
          {"M", c.grid.numRbs},
          {"target_sinr", c.grid.targetSinr},
          {"noise_power", c.grid.noisePower},
          {"margin", c.grid.margin}}},
        {"decode_mode", ToString(c.decodeMode)},
        {"scheme", ToString(c.scheme)},
        {"semi_gf",
         {{"threshold_type", ToString(c.semiGf.thresholdType)},
          {"protocol", ToString(c.semiGf.protocol.kind)},
          {"violation_prob", c.semiGf.protocol.violationProb},
          {"estimation_window", c.semiGf.protocol.estimationWindow},
          {"gb_qos_sinr", c.semiGf.gbQosSinr},
          {"gb_avg_power", c.semiGf.gbAvgPower}}},
        {"traffic",
         {{"kind", c.traffic.kind == TrafficKind::Bernoulli ? "bernoulli" : "burst"},
          {"devices", c.traffic.devices},
          {"activation_prob", c.traffic.activationProb},
          {"max_attempts", c.traffic.maxAttempts},
          {"burst_slot", c.traffic.burstSlot},
          {"burst_fraction", c.traffic.burstFraction},
          {"background_prob", c.traffic.backgroundProb},
          {"placement", c.traffic.placement == Placement::Fixed ? "fixed" : "resample"}}},
        {"barring",
         {{"enabled", c.barring.enabled},
          {"period", c.barring.period},
          {"load_cap", c.barring.loadCap},
          {"search_max", c.barring.searchMax},
          {"estimator", c.barring.estimator == LoadEstimator::IdleFraction ? "idle_fraction" : "oracle"}}},
        {"power_map", pm},
        {"metrics", {{"window", c.metrics.window}, {"per_slot", c.metrics.perSlot}}},
        {"slots", c.slots},
        {"warmup_slots", c.warmupSlots},
        {"seed", c.seed},
    };
}

void
SetConfigValue(json& doc, std::string_view dottedKey, const json& value)
{
    if (dottedKey.empty())
    {
        throw ConfigError("<override>", "empty key");
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true)
    {
        std::size_t dot = dottedKey.find('.', start);
        std::string part(dottedKey.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
        if (part.empty())
        {
            throw ConfigError(std::string(dottedKey), "malformed key");
        }
        if (!node->is_object())
        {
            *node = json::object();
        }
        if (dot == std::string_view::npos)
        {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

void
SetConfigText(json& doc, std::string_view dottedKey, std::string_view valueText)
{
    json value;
    try
    {
        value = json::parse(valueText);
    }
    catch (const json::parse_error&)
    {
        value = std::string(valueText);
    }
    SetConfigValue(doc, dottedKey, value);
}

std::optional<PowerMap>
ResolvePowerMap(const RunConfig& c)
{
    std::optional<PowerMap> map;
    switch (c.powerMap.source)
    {
    case PowerMapConfig::Source::None:
        return std::nullopt;
    case PowerMapConfig::Source::Inline:
        map = c.powerMap.inlineMap;
        break;
    case PowerMapConfig::Source::File: {
        std::ifstream in(c.powerMap.path);
        if (!in)
        {
            throw IoError("cannot open power map " + c.powerMap.path);
        }
        try
        {
            map = PowerMapFromJson(json::parse(in));
        }
        catch (const json::exception& e)
        {
            throw ConfigError("power_map.path", e.what());
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError("power_map.path", e.what());
        }
        break;
    }
    case PowerMapConfig::Source::Generate: {
        const auto& g = c.powerMap.generate;
        try
        {
            auto regions = PartitionArea(g.area, g.rows, g.cols);
            AssignMeanGains(regions, g.channel, g.bsLocation);
            map = BuildPowerMap(regions, c.grid.Build(), g.channel, g.maxTpl, g.bsLocation);
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError("power_map", e.what());
        }
        break;
    }
    }
    CheckMapGrid(*map, c.grid, "power_map");
    return map;
}

} // namespace mtnoma
