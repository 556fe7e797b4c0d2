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

#ifndef MTNOMA_OUTPUT_H
#define MTNOMA_OUTPUT_H

#include "mtnoma/run-config.h"
#include "mtnoma/sim-engine.h"

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mtnoma
{

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that reads back to the same double ('.' separator).
std::string FormatNumber(double value);

enum class RunTable
{
    Slots,
    Windows,
    Periods,
};

RunTable ParseRunTable(std::string_view text);

/*
 * CSV layout: '#'-prefixed metadata lines (artifact version, seed, resolved
 * config as one-line JSON), then a header row, then data rows.
 */
std::string RunToCsv(const MetricsSeries& series, const RunConfig& config, RunTable table);
std::string SweepToCsv(const SweepTable& table, const RunConfig& config);
std::string CompareToCsv(const CompareTable& table, const RunConfig& config);
std::string BarringDemoToCsv(const BarringDemoTable& table, const RunConfig& config);

struct CsvDocument
{
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvDocument ParseCsv(std::string_view text);

nlohmann::json RunToJson(const MetricsSeries& series, const RunConfig& config);
nlohmann::json SweepToJson(const SweepTable& table, const RunConfig& config);
nlohmann::json CompareToJson(const CompareTable& table, const RunConfig& config);
nlohmann::json BarringDemoToJson(const BarringDemoTable& table, const RunConfig& config);

struct RunDocument
{
    RunConfig config;
    MetricsSeries series;
};

struct SweepDocument
{
    RunConfig config;
    SweepTable table;
};

/// Inverse of RunToJson / SweepToJson. Throws InvalidInput on schema errors.
RunDocument ParseRunJson(const nlohmann::json& doc);
SweepDocument ParseSweepJson(const nlohmann::json& doc);

/// Pretty JSON text with a trailing newline.
std::string DumpJson(const nlohmann::json& doc);

/// Relative paths are placed under $MTNOMA_OUTPUT_DIR when it is set.
std::string ResolveOutputPath(const std::string& path);

/// Writes text to the file (creating parent directories). Throws IoError.
void WriteText(const std::string& path, std::string_view text);
std::string ReadText(const std::string& path);

} // namespace mtnoma

#endif // MTNOMA_OUTPUT_H
