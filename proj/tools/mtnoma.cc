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

#include "mtnoma/aar-analytics.h"
#include "mtnoma/errors.h"
#include "mtnoma/output.h"
#include "mtnoma/power-map.h"
#include "mtnoma/run-config.h"
#include "mtnoma/sim-engine.h"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

using namespace mtnoma;
using nlohmann::json;

namespace
{

enum class Format
{
    Csv,
    Json,
};

struct GlobalOptions
{
    std::string configPath;
    std::vector<std::string> overrides;
    int workers = 1;
    std::string format = "csv";
    std::string output;
    std::optional<std::uint64_t> seed;
};

Format
ParseFormat(const std::string& text)
{
    if (text == "csv")
    {
        return Format::Csv;
    }
    if (text == "json")
    {
        return Format::Json;
    }
    throw InvalidParameter("--format must be csv or json");
}

// Accepts "a:b" and "a:b:step" ranges (inclusive) and comma lists.
std::vector<double>
ParseValues(const std::string& text)
{
    std::vector<double> values;
    if (text.empty())
    {
        return values;
    }
    if (text.find(':') != std::string::npos)
    {
        std::vector<double> parts;
        std::size_t start = 0;
        while (true)
        {
            const std::size_t colon = text.find(':', start);
            parts.push_back(std::stod(text.substr(start, colon - start)));
            if (colon == std::string::npos)
            {
                break;
            }
            start = colon + 1;
        }
        if (parts.size() < 2 || parts.size() > 3)
        {
            throw InvalidParameter("range must be a:b or a:b:step");
        }
        const double step = parts.size() == 3 ? parts[2] : 1.0;
        if (!(step > 0.0) || parts[1] < parts[0])
        {
            throw InvalidParameter("range needs a positive step and a <= b");
        }
        const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / step + 1e-9)) + 1;
        for (long i = 0; i < count; ++i)
        {
            values.push_back(parts[0] + static_cast<double>(i) * step);
        }
        return values;
    }
    std::size_t start = 0;
    while (true)
    {
        const std::size_t comma = text.find(',', start);
        values.push_back(std::stod(text.substr(start, comma - start)));
        if (comma == std::string::npos)
        {
            break;
        }
        start = comma + 1;
    }
    return values;
}

std::vector<int>
ParseCounts(const std::string& text)
{
    std::vector<int> counts;
    for (double v : ParseValues(text))
    {
        if (v < 1.0 || v != std::floor(v))
        {
            throw InvalidParameter("device counts must be positive integers");
        }
        counts.push_back(static_cast<int>(v));
    }
    return counts;
}

RunConfig
BuildConfig(const GlobalOptions& g, json base = json::object())
{
    json doc = g.configPath.empty() ? std::move(base) : json::parse(ReadText(g.configPath));
    for (const auto& o : g.overrides)
    {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0)
        {
            throw InvalidParameter("--set expects key=value, got '" + o + "'");
        }
        SetConfigText(doc, o.substr(0, eq), o.substr(eq + 1));
    }
    if (g.seed)
    {
        SetConfigValue(doc, "seed", json(*g.seed));
    }
    return ParseConfig(doc);
}

void
Emit(const GlobalOptions& g, const std::string& text)
{
    if (g.output.empty())
    {
        std::cout << text;
        std::cout.flush();
        return;
    }
    WriteText(ResolveOutputPath(g.output), text);
}

std::string
Csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows)
{
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i)
    {
        out += (i ? "," : "") + header[i];
    }
    out += '\n';
    for (const auto& row : rows)
    {
        for (std::size_t i = 0; i < row.size(); ++i)
        {
            out += (i ? "," : "") + FormatNumber(row[i]);
        }
        out += '\n';
    }
    return out;
}

AarResult
RunAar(const RunConfig& c, int n, bool exact, std::uint64_t trials, int workers)
{
    const PowerGrid grid = c.grid.Build();
    if (exact)
    {
        return ExactAar(n, grid, SelectionModel::Uniform(), c.decodeMode);
    }
    return McAar(n, grid, SelectionModel::Uniform(), c.decodeMode, trials, c.seed, workers);
}

} // namespace

int
main(int argc, char** argv)
{
    CLI::App app{"Multi-tier NOMA random access toolkit"};
    app.set_version_flag("--version", std::string(Version()));
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("-c,--config", g.configPath, "JSON configuration file");
    app.add_option("-s,--set", g.overrides, "Override a configuration key (dotted.key=value)");
    app.add_option("-w,--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("-f,--format", g.format, "Output format (csv or json)")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("-o,--output", g.output, "Output file (relative paths honour MTNOMA_OUTPUT_DIR)");
    app.add_option("--seed", g.seed, "Master seed (overrides the configuration)");

    auto* levels = app.add_subcommand("levels", "Print the power-level grid");

    std::string devices = "1:20";
    auto* aarExact = app.add_subcommand("aar-exact", "Exact AAR under uniform selection");
    aarExact->add_option("-n,--devices", devices, "Device counts (a:b, a:b:step or a,b,c)");

    std::uint64_t trials = 1'000'000;
    auto* aarMc = app.add_subcommand("aar-mc", "Monte Carlo AAR under uniform selection");
    aarMc->add_option("-n,--devices", devices, "Device counts (a:b, a:b:step or a,b,c)");
    aarMc->add_option("-t,--trials", trials, "Trials per device count");

    int nMax = 0;
    auto* optimal = app.add_subcommand("optimal-load", "Load that maximises the AAR");
    optimal->add_option("--n-max", nMax, "Upper end of the search (default max(20, 4NM))");

    auto* powermap = app.add_subcommand("powermap", "Power-map construction");
    powermap->require_subcommand(1);
    auto* generate = powermap->add_subcommand("generate", "Build a map from power_map generation settings");
    std::string mapPath;
    QLearningOptions qOptions;
    auto* refine = powermap->add_subcommand("refine", "Refine a map by multi-agent Q-learning");
    refine->add_option("-m,--map", mapPath, "Input map (default: the configured map)");
    refine->add_option("--episodes", qOptions.episodes, "Training episodes");
    refine->add_option("--steps", qOptions.stepsPerEpisode, "Steps per episode");
    refine->add_option("--learning-rate", qOptions.learningRate, "Learning rate");
    refine->add_option("--discount", qOptions.discount, "Discount factor");
    refine->add_option("--exploration", qOptions.exploration, "Exploration probability");

    std::string table = "windows";
    auto* simulate = app.add_subcommand("simulate", "Run one simulation");
    simulate->add_option("--table", table, "CSV table: slots, windows or periods");

    std::string axis = "traffic.devices";
    std::string values;
    int replications = 1;
    auto* sweep = app.add_subcommand("sweep", "Sweep one configuration key");
    sweep->add_option("--axis", axis, "Dotted configuration key to vary");
    sweep->add_option("--values", values, "Axis values (a:b, a:b:step or a,b,c)")->required();
    sweep->add_option("-r,--replications", replications, "Replications per value")->check(CLI::PositiveNumber);

    std::string compareDevices = "1:60";
    auto* compare = app.add_subcommand("compare", "GB, GF and semi-GF AAR against device count");
    compare->add_option("-n,--devices", compareDevices, "Device counts");
    compare->add_option("-r,--replications", replications, "Replications per count")->check(CLI::PositiveNumber);

    std::string barringDevices = "10,20,26,30,40,60,80,100,150,200";
    auto* barring = app.add_subcommand("barring-demo", "AAR with and without access barring");
    barring->add_option("-n,--devices", barringDevices, "Device counts");
    barring->add_option("-r,--replications", replications, "Replications per count")->check(CLI::PositiveNumber);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e);
    }

    try
    {
        const Format format = ParseFormat(g.format);
        if (levels->parsed())
        {
            const RunConfig c = BuildConfig(g);
            const PowerGrid grid = c.grid.Build();
            if (format == Format::Json)
            {
                Emit(g, DumpJson(ToJson(grid)));
            }
            else
            {
                std::vector<std::vector<double>> rows;
                for (int i = 1; i <= grid.numLevels; ++i)
                {
                    rows.push_back({static_cast<double>(i), grid.Level(i)});
                }
                Emit(g, Csv({"level", "received_power"}, rows));
            }
        }
        else if (aarExact->parsed() || aarMc->parsed())
        {
            const bool exact = aarExact->parsed();
            const RunConfig c = BuildConfig(g);
            std::vector<std::vector<double>> rows;
            json jrows = json::array();
            for (int n : ParseCounts(devices))
            {
                const AarResult r = RunAar(c, n, exact, trials, g.workers);
                rows.push_back({static_cast<double>(n),
                                r.expectedSuccessesPerSlot,
                                r.perRb,
                                r.stdError,
                                static_cast<double>(r.trials)});
                jrows.push_back({{"devices", n},
                                 {"aar", r.expectedSuccessesPerSlot},
                                 {"aar_per_rb", r.perRb},
                                 {"std_error", r.stdError},
                                 {"trials", r.trials}});
            }
            if (format == Format::Json)
            {
                Emit(g,
                     DumpJson({{"grid", ToJson(c.grid.Build())},
                               {"decode_mode", ToString(c.decodeMode)},
                               {"method", exact ? "exact" : "monte_carlo"},
                               {"rows", jrows}}));
            }
            else
            {
                Emit(g, Csv({"devices", "aar", "aar_per_rb", "std_error", "trials"}, rows));
            }
        }
        else if (optimal->parsed())
        {
            const RunConfig c = BuildConfig(g);
            const PowerGrid grid = c.grid.Build();
            const int limit = nMax > 0 ? nMax : std::max(20, 4 * grid.numLevels * grid.numRbs);
            OptimalLoadOptions options;
            options.seed = c.seed;
            const OptimalLoadResult r = OptimalLoad(grid, c.decodeMode, limit, options);
            if (format == Format::Json)
            {
                Emit(g, DumpJson({{"n_star", r.optimalLoad}, {"max_aar", r.maxAar}, {"exact", r.exact}}));
            }
            else
            {
                Emit(g,
                     Csv({"n_star", "max_aar", "exact"},
                         {{static_cast<double>(r.optimalLoad), r.maxAar, r.exact ? 1.0 : 0.0}}));
            }
        }
        else if (generate->parsed() || refine->parsed())
        {
            RunConfig c = BuildConfig(g);
            PowerMap map;
            if (refine->parsed() && !mapPath.empty())
            {
                map = PowerMapFromJson(json::parse(ReadText(mapPath)));
            }
            else
            {
                if (generate->parsed() || c.powerMap.source == PowerMapConfig::Source::None)
                {
                    c.powerMap.source = PowerMapConfig::Source::Generate;
                }
                map = *ResolvePowerMap(c);
            }
            if (refine->parsed())
            {
                qOptions.seed = c.seed;
                const QLearningResult r = RefinePowerMapQLearning(map, MakeSicHook(map), qOptions);
                std::cerr << "episodes " << r.episodesRun << (r.converged ? " (converged)" : " (not converged)")
                          << "\n";
                map = r.map;
            }
            Emit(g, DumpJson(ToJson(map)));
        }
        else if (simulate->parsed())
        {
            const RunConfig c = BuildConfig(g);
            const RunTable t = ParseRunTable(table);
            SimOptions options;
            options.workers = g.workers;
            const MetricsSeries series = RunSimulation(c, c.seed, options);
            Emit(g, format == Format::Json ? DumpJson(RunToJson(series, c)) : RunToCsv(series, c, t));
        }
        else if (sweep->parsed())
        {
            const RunConfig c = BuildConfig(g);
            SweepSpec spec;
            spec.axis = axis;
            spec.values = ParseValues(values);
            spec.replications = replications;
            spec.baseSeed = c.seed;
            spec.workers = g.workers;
            const SweepTable result = Sweep(c, spec);
            Emit(g, format == Format::Json ? DumpJson(SweepToJson(result, c)) : SweepToCsv(result, c));
        }
        else if (compare->parsed())
        {
            const RunConfig c = BuildConfig(g, ToJson(DefaultCompareConfig()));
            const CompareTable result = Compare(c, ParseCounts(compareDevices), replications, g.workers);
            Emit(g, format == Format::Json ? DumpJson(CompareToJson(result, c)) : CompareToCsv(result, c));
        }
        else if (barring->parsed())
        {
            const RunConfig c = BuildConfig(g, ToJson(DefaultBarringConfig()));
            const BarringDemoTable result = BarringDemo(c, ParseCounts(barringDevices), replications, g.workers);
            Emit(g, format == Format::Json ? DumpJson(BarringDemoToJson(result, c)) : BarringDemoToCsv(result, c));
        }
    }
    catch (const std::exception& e)
    {
        std::cerr << "mtnoma: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
