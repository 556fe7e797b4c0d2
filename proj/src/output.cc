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

#include "mtnoma/output.h"

#include "mtnoma/errors.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mtnoma
{

using nlohmann::json;

namespace
{

const std::vector<std::string> kSlotColumns{"slot",
                                            "backlogged",
                                            "active",
                                            "transmitters",
                                            "successes",
                                            "failures",
                                            "silent",
                                            "collisions",
                                            "gb_present",
                                            "gb_successes",
                                            "gb_outages",
                                            "dropped",
                                            "energy"};

std::vector<double>
SlotValues(const SlotRecord& r)
{
    return {static_cast<double>(r.slot),
            static_cast<double>(r.backlogged),
            static_cast<double>(r.active),
            static_cast<double>(r.transmitters),
            static_cast<double>(r.successes),
            static_cast<double>(r.failures),
            static_cast<double>(r.silent),
            static_cast<double>(r.collisions),
            static_cast<double>(r.gbPresent),
            static_cast<double>(r.gbSuccesses),
            static_cast<double>(r.gbOutages),
            static_cast<double>(r.dropped),
            r.energy};
}

SlotRecord
SlotFromValues(const std::vector<double>& v)
{
    if (v.size() != kSlotColumns.size())
    {
        throw InvalidInput("slot row has the wrong number of columns");
    }
    auto i = [&](std::size_t k) { return static_cast<int>(v[k]); };
    SlotRecord r;
    r.slot = static_cast<std::int64_t>(v[0]);
    r.backlogged = i(1);
    r.active = i(2);
    r.transmitters = i(3);
    r.successes = i(4);
    r.failures = i(5);
    r.silent = i(6);
    r.collisions = i(7);
    r.gbPresent = i(8);
    r.gbSuccesses = i(9);
    r.gbOutages = i(10);
    r.dropped = i(11);
    r.energy = v[12];
    return r;
}

const std::vector<std::string> kPeriodColumns{"index",
                                              "start_slot",
                                              "slots",
                                              "rate",
                                              "next_rate",
                                              "idle_rb_fraction",
                                              "load_estimate",
                                              "successes_per_slot",
                                              "mean_transmitters"};

std::vector<double>
PeriodValues(const PeriodRecord& p)
{
    return {static_cast<double>(p.index),
            static_cast<double>(p.startSlot),
            static_cast<double>(p.slots),
            p.rate,
            p.nextRate,
            p.idleRbFraction,
            p.loadEstimate,
            p.successesPerSlot,
            p.meanTransmitters};
}

PeriodRecord
PeriodFromValues(const std::vector<double>& v)
{
    if (v.size() != kPeriodColumns.size())
    {
        throw InvalidInput("period row has the wrong number of columns");
    }
    PeriodRecord p;
    p.index = static_cast<int>(v[0]);
    p.startSlot = static_cast<std::int64_t>(v[1]);
    p.slots = static_cast<int>(v[2]);
    p.rate = v[3];
    p.nextRate = v[4];
    p.idleRbFraction = v[5];
    p.loadEstimate = v[6];
    p.successesPerSlot = v[7];
    p.meanTransmitters = v[8];
    return p;
}

const std::vector<std::string> kWindowColumns{"start_slot", "slots", "aar"};

std::string
Row(const std::vector<double>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (i)
        {
            out += ',';
        }
        out += FormatNumber(values[i]);
    }
    out += '\n';
    return out;
}

std::string
Header(const std::vector<std::string>& names)
{
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i)
    {
        if (i)
        {
            out += ',';
        }
        out += names[i];
    }
    out += '\n';
    return out;
}

std::string
Preamble(const RunConfig& config, std::string_view kind, std::string_view extra = {})
{
    std::string out = "# mtnoma " + std::string(Version()) + " " + std::string(kind) + " schema " +
                      std::to_string(kSchemaVersion) + "\n";
    out += "# seed " + std::to_string(config.seed) + "\n";
    if (!extra.empty())
    {
        out += "# " + std::string(extra) + "\n";
    }
    out += "# config " + ToJson(config).dump() + "\n";
    return out;
}

json
Envelope(std::string_view schema, const RunConfig& config)
{
    return {{"schema", schema},
            {"schema_version", kSchemaVersion},
            {"version", Version()},
            {"seed", config.seed},
            {"config", ToJson(config)}};
}

json
Columnar(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows)
{
    json r = json::array();
    for (const auto& row : rows)
    {
        r.push_back(row);
    }
    return {{"columns", columns}, {"rows", r}};
}

std::vector<std::vector<double>>
FromColumnar(const json& j, const std::vector<std::string>& columns)
{
    if (j.at("columns").get<std::vector<std::string>>() != columns)
    {
        throw InvalidInput("unexpected column set");
    }
    std::vector<std::vector<double>> rows;
    for (const auto& r : j.at("rows"))
    {
        rows.push_back(r.get<std::vector<double>>());
    }
    return rows;
}

json
SummaryToJson(const RunSummary& s)
{
    return {{"slots", s.slots},
            {"aar", s.aar},
            {"aar_std_error", s.aarStdError},
            {"system_load", s.systemLoad},
            {"mean_backlog", s.meanBacklog},
            {"gb_outage_rate", s.gbOutageRate},
            {"collision_rate", s.collisionRate},
            {"energy_per_success", s.energyPerSuccess},
            {"dropped_per_slot", s.droppedPerSlot},
            {"successes", s.successes},
            {"transmissions", s.transmissions},
            {"dropped", s.dropped}};
}

RunSummary
SummaryFromJson(const json& j)
{
    RunSummary s;
    s.slots = j.at("slots").get<std::int64_t>();
    s.aar = j.at("aar").get<double>();
    s.aarStdError = j.at("aar_std_error").get<double>();
    s.systemLoad = j.at("system_load").get<double>();
    s.meanBacklog = j.at("mean_backlog").get<double>();
    s.gbOutageRate = j.at("gb_outage_rate").get<double>();
    s.collisionRate = j.at("collision_rate").get<double>();
    s.energyPerSuccess = j.at("energy_per_success").get<double>();
    s.droppedPerSlot = j.at("dropped_per_slot").get<double>();
    s.successes = j.at("successes").get<std::int64_t>();
    s.transmissions = j.at("transmissions").get<std::int64_t>();
    s.dropped = j.at("dropped").get<std::int64_t>();
    return s;
}

void
CheckEnvelope(const json& doc, std::string_view schema)
{
    if (!doc.is_object() || doc.value("schema", "") != schema)
    {
        throw InvalidInput("not a " + std::string(schema) + " document");
    }
    if (doc.value("schema_version", 0) != kSchemaVersion)
    {
        throw InvalidInput("unsupported schema version");
    }
}

} // namespace

std::string
FormatNumber(double value)
{
    char buf[64];
    if (value == std::floor(value) && std::abs(value) < 1e15)
    {
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), static_cast<long long>(value));
        return std::string(buf, end);
    }
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc())
    {
        throw InvalidInput("number formatting failed");
    }
    return std::string(buf, end);
}

RunTable
ParseRunTable(std::string_view text)
{
    if (text == "slots")
    {
        return RunTable::Slots;
    }
    if (text == "windows")
    {
        return RunTable::Windows;
    }
    if (text == "periods")
    {
        return RunTable::Periods;
    }
    throw InvalidParameter("unknown table '" + std::string(text) + "' (expected slots, windows or periods)");
}

std::string
RunToCsv(const MetricsSeries& series, const RunConfig& config, RunTable table)
{
    std::string out = Preamble(config, "run");
    switch (table)
    {
    case RunTable::Slots:
        out += Header(kSlotColumns);
        for (const auto& r : series.slots)
        {
            out += Row(SlotValues(r));
        }
        break;
    case RunTable::Windows:
        out += Header(kWindowColumns);
        for (const auto& w : series.windows)
        {
            out += Row({static_cast<double>(w.startSlot), static_cast<double>(w.slots), w.aar});
        }
        break;
    case RunTable::Periods:
        out += Header(kPeriodColumns);
        for (const auto& p : series.periods)
        {
            out += Row(PeriodValues(p));
        }
        break;
    }
    return out;
}

std::string
SweepToCsv(const SweepTable& table, const RunConfig& config)
{
    std::string seeds;
    for (auto s : table.seeds)
    {
        seeds += (seeds.empty() ? "" : " ") + std::to_string(s);
    }
    std::string out = Preamble(config, "sweep", "replication seeds " + seeds);
    std::vector<std::string> header{table.axis, "replications"};
    for (const auto& m : table.metrics)
    {
        header.push_back(m + "_mean");
        header.push_back(m + "_stderr");
    }
    out += Header(header);
    for (const auto& r : table.rows)
    {
        std::vector<double> v{r.value, static_cast<double>(r.replications)};
        for (std::size_t j = 0; j < r.mean.size(); ++j)
        {
            v.push_back(r.mean[j]);
            v.push_back(r.stdError[j]);
        }
        out += Row(v);
    }
    return out;
}

std::string
CompareToCsv(const CompareTable& table, const RunConfig& config)
{
    std::string out = Preamble(config,
                               "compare",
                               "max_gain_over_gb " + FormatNumber(table.maxGainOverGb) + " max_ratio_over_gf " +
                                   FormatNumber(table.maxRatioOverGf));
    out += Header({"devices", "gb", "gf", "semi_gf_dynamic", "semi_gf_open_loop"});
    for (const auto& r : table.rows)
    {
        out += Row({static_cast<double>(r.devices), r.gb, r.gf, r.semiDynamic, r.semiOpenLoop});
    }
    return out;
}

std::string
BarringDemoToCsv(const BarringDemoTable& table, const RunConfig& config)
{
    std::string out = Preamble(config,
                               "barring-demo",
                               "optimal_load " + std::to_string(table.optimalLoad) + " max_aar " +
                                   FormatNumber(table.maxAar));
    out += Header({"devices", "aar_barring", "aar_no_barring", "load_barring", "load_no_barring"});
    for (const auto& r : table.rows)
    {
        out += Row({static_cast<double>(r.devices), r.aarWith, r.aarWithout, r.loadWith, r.loadWithout});
    }
    return out;
}

CsvDocument
ParseCsv(std::string_view text)
{
    CsvDocument doc;
    std::size_t pos = 0;
    bool haveHeader = false;
    while (pos < text.size())
    {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        if (line.empty())
        {
            continue;
        }
        if (line.front() == '#')
        {
            doc.comments.emplace_back(line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1));
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true)
        {
            std::size_t comma = line.find(',', start);
            cells.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                 : comma - start));
            if (comma == std::string_view::npos)
            {
                break;
            }
            start = comma + 1;
        }
        if (!haveHeader)
        {
            doc.header = std::move(cells);
            haveHeader = true;
        }
        else
        {
            if (cells.size() != doc.header.size())
            {
                throw InvalidInput("CSV row width differs from the header");
            }
            doc.rows.push_back(std::move(cells));
        }
    }
    return doc;
}

json
RunToJson(const MetricsSeries& series, const RunConfig& config)
{
    json doc = Envelope("mtnoma.run", config);
    doc["seed"] = series.seed;
    doc["window"] = series.window;
    if (series.optimalLoad)
    {
        doc["optimal_load"] = {{"n_star", series.optimalLoad->optimalLoad},
                               {"max_aar", series.optimalLoad->maxAar},
                               {"exact", series.optimalLoad->exact}};
    }
    doc["summary"] = SummaryToJson(series.summary);
    std::vector<std::vector<double>> windows;
    for (const auto& w : series.windows)
    {
        windows.push_back({static_cast<double>(w.startSlot), static_cast<double>(w.slots), w.aar});
    }
    doc["windows"] = Columnar(kWindowColumns, windows);
    std::vector<std::vector<double>> periods;
    for (const auto& p : series.periods)
    {
        periods.push_back(PeriodValues(p));
    }
    doc["periods"] = Columnar(kPeriodColumns, periods);
    std::vector<std::vector<double>> slots;
    for (const auto& r : series.slots)
    {
        slots.push_back(SlotValues(r));
    }
    doc["slots"] = Columnar(kSlotColumns, slots);
    return doc;
}

RunDocument
ParseRunJson(const json& doc)
{
    CheckEnvelope(doc, "mtnoma.run");
    RunDocument out;
    try
    {
        out.config = ParseConfig(doc.at("config"));
        auto& s = out.series;
        s.seed = doc.at("seed").get<std::uint64_t>();
        s.window = doc.at("window").get<int>();
        if (doc.contains("optimal_load"))
        {
            const auto& o = doc.at("optimal_load");
            s.optimalLoad =
                OptimalLoadResult{o.at("n_star").get<int>(), o.at("max_aar").get<double>(), o.at("exact").get<bool>()};
        }
        s.summary = SummaryFromJson(doc.at("summary"));
        for (const auto& w : FromColumnar(doc.at("windows"), kWindowColumns))
        {
            s.windows.push_back(WindowRecord{static_cast<std::int64_t>(w[0]), static_cast<int>(w[1]), w[2]});
        }
        for (const auto& p : FromColumnar(doc.at("periods"), kPeriodColumns))
        {
            s.periods.push_back(PeriodFromValues(p));
        }
        for (const auto& r : FromColumnar(doc.at("slots"), kSlotColumns))
        {
            s.slots.push_back(SlotFromValues(r));
        }
    }
    catch (const json::exception& e)
    {
        throw InvalidInput(std::string("run document: ") + e.what());
    }
    return out;
}

json
SweepToJson(const SweepTable& table, const RunConfig& config)
{
    json doc = Envelope("mtnoma.sweep", config);
    doc["axis"] = table.axis;
    doc["seeds"] = table.seeds;
    doc["metrics"] = table.metrics;
    json rows = json::array();
    for (const auto& r : table.rows)
    {
        rows.push_back({{"value", r.value},
                        {"replications", r.replications},
                        {"mean", r.mean},
                        {"std_error", r.stdError}});
    }
    doc["rows"] = rows;
    return doc;
}

SweepDocument
ParseSweepJson(const json& doc)
{
    CheckEnvelope(doc, "mtnoma.sweep");
    SweepDocument out;
    try
    {
        out.config = ParseConfig(doc.at("config"));
        auto& t = out.table;
        t.axis = doc.at("axis").get<std::string>();
        t.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        t.metrics = doc.at("metrics").get<std::vector<std::string>>();
        for (const auto& r : doc.at("rows"))
        {
            SweepRow row;
            row.value = r.at("value").get<double>();
            row.replications = r.at("replications").get<int>();
            row.mean = r.at("mean").get<std::vector<double>>();
            row.stdError = r.at("std_error").get<std::vector<double>>();
            if (row.mean.size() != t.metrics.size() || row.stdError.size() != t.metrics.size())
            {
                throw InvalidInput("sweep row width differs from the metric list");
            }
            t.rows.push_back(std::move(row));
        }
    }
    catch (const json::exception& e)
    {
        throw InvalidInput(std::string("sweep document: ") + e.what());
    }
    return out;
}

json
CompareToJson(const CompareTable& table, const RunConfig& config)
{
    json doc = Envelope("mtnoma.compare", config);
    doc["max_gain_over_gb"] = table.maxGainOverGb;
    doc["max_ratio_over_gf"] = table.maxRatioOverGf;
    json rows = json::array();
    for (const auto& r : table.rows)
    {
        rows.push_back({{"devices", r.devices},
                        {"gb", r.gb},
                        {"gf", r.gf},
                        {"semi_gf_dynamic", r.semiDynamic},
                        {"semi_gf_open_loop", r.semiOpenLoop}});
    }
    doc["rows"] = rows;
    return doc;
}

json
BarringDemoToJson(const BarringDemoTable& table, const RunConfig& config)
{
    json doc = Envelope("mtnoma.barring_demo", config);
    doc["optimal_load"] = table.optimalLoad;
    doc["max_aar"] = table.maxAar;
    json rows = json::array();
    for (const auto& r : table.rows)
    {
        rows.push_back({{"devices", r.devices},
                        {"aar_barring", r.aarWith},
                        {"aar_no_barring", r.aarWithout},
                        {"load_barring", r.loadWith},
                        {"load_no_barring", r.loadWithout}});
    }
    doc["rows"] = rows;
    return doc;
}

std::string
DumpJson(const json& doc)
{
    return doc.dump(2) + "\n";
}

std::string
ResolveOutputPath(const std::string& path)
{
    std::filesystem::path p(path);
    const char* dir = std::getenv("MTNOMA_OUTPUT_DIR");
    if (p.is_relative() && dir && *dir)
    {
        return (std::filesystem::path(dir) / p).string();
    }
    return path;
}

void
WriteText(const std::string& path, std::string_view text)
{
    std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path())
    {
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary);
    if (!out)
    {
        throw IoError("cannot write " + path);
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out)
    {
        throw IoError("write failed for " + path);
    }
}

std::string
ReadText(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError("cannot read " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace mtnoma
