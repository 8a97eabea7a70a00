#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pricesim/simulation.hpp"

namespace pricesim {

// Current scenario file schema; files carrying any other value are rejected.
inline constexpr int kScenarioSchemaVersion = 1;

struct ParsedScenario {
    ScenarioConfig config;
    // One note per field the parser filled in from a default, e.g.
    // "snapshotEvery = 1 (default)".
    std::vector<std::string> applied_defaults;
};

// Parses and fully validates a scenario JSON document. Errors name the JSON
// path of the offending key (schema problems) or the violated rule (semantic
// problems); both throw ConfigError.
ParsedScenario parse_scenario(const std::string& json_text);
ParsedScenario load_scenario_file(const std::string& path);

// Inverse of parse_scenario up to defaults: every field is written out
// explicitly, so parsing the result reproduces the config exactly.
std::string serialize_scenario(const ScenarioConfig& config);

// metrics.csv: one row per step, columns step,volume,budget,dropped then six
// per agent (bid_/served_/reward_/cumrev_/mean_/stddev_<label>); mean/stddev
// stay empty for non-bandits and on non-snapshot steps. Floats use 9
// significant digits, UTF-8, LF.
std::string metrics_csv(const ScenarioConfig& config, const std::vector<StepRecord>& records);

// records.ndjson: one compact JSON object per StepRecord, fixed key order,
// doubles serialized losslessly so parse_records_ndjson reloads records
// exactly.
std::string records_ndjson(const std::vector<StepRecord>& records);
std::vector<StepRecord> parse_records_ndjson(const std::string& text);
std::vector<StepRecord> load_records_ndjson(const std::string& path);

// Writes metrics.csv and records.ndjson into out_dir (created if needed).
void write_metrics(const ScenarioConfig& config, const std::vector<StepRecord>& records,
                   const std::string& out_dir);

enum class PlotKind {
    kPolicyTrace,    // step, policy mean, policy stddev per bandit
    kServedVolumes,  // step, served volume per agent, plus the dropped series
    kRevenueRate,    // step, per-step reward per agent
    kTotalRevenue,   // step, cumulative revenue per agent
    kPolicyDensity,  // Gaussian pdf of each bandit's snapshot at one step
};

struct PlotRequest {
    PlotKind kind = PlotKind::kPolicyTrace;
    std::int64_t density_step = -1;  // kPolicyDensity only

    bool operator==(const PlotRequest&) const = default;
};

// Comma-separated tokens: policyTrace, servedVolumes, revenueRate,
// totalRevenue, policyDensity=STEP. Unknown tokens throw ConfigError.
std::vector<PlotRequest> parse_plot_list(const std::string& list);

// Writes one whitespace-separated data file per series (with a '#' header
// naming the columns) plus a manifest <kind>.manifest listing series names
// and their files. policyDensity tabulates each bandit's snapshot pdf over
// 256 evenly spaced prices across the scenario's price bounds and fails if
// the requested step has no snapshot.
void emit_plot_data(const ScenarioConfig& config, const std::vector<StepRecord>& records,
                    const PlotRequest& request, const std::string& out_dir);

// Whole-file helpers. Reads throw ConfigError (bad input path), writes throw
// SimulationFault (failed output), both naming the path. Writes go to a temp
// file in the destination directory followed by an atomic rename.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace pricesim
