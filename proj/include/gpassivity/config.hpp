#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpassivity/scenarios.hpp"

namespace gpassivity {

// A fully resolved scenario run: every parameter pinned, so the record
// reproduces the run bit-identically.
struct ScenarioConfig {
    std::string scenario;          // correlated-heat-flow | heat-leak |
                                   // dephasing-bounds | lazy-demon | custom
    nlohmann::json parameters;     // validated, defaults filled in
    std::string format = "both";   // csv | json | both
    std::string output_path;       // directory or empty for cwd
    std::vector<std::string> series;  // CSV column subset; empty keeps all
};

struct SweepAxis {
    std::string parameter;
    double from = 0.0;
    double to = 0.0;
    double step = 1.0;
};

struct RunOutcome {
    int exit_code = 0;  // 0 ok, 2 violations detected
    std::map<std::string, double> summary;
    std::string csv;          // series table
    nlohmann::json report;    // full machine-readable report
};

// Parse + validate a config document. Unknown keys anywhere are an error.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig parse_config_file(const std::filesystem::path& path);

// Execute one scenario. Does not touch the filesystem.
RunOutcome run_scenario(const ScenarioConfig& config);

// Write the requested artifacts under config.output_path; returns the files
// written.
std::vector<std::filesystem::path> write_outputs(const ScenarioConfig& config,
                                                 const RunOutcome& outcome);

struct SweepOutcome {
    int exit_code = 0;
    std::string csv;
    nlohmann::json report;
};

// Grid the axes (one or two), run every point (optionally in parallel),
// aggregate one row per point in lexicographic axis order. A failing point
// records its error string without aborting the sweep.
SweepOutcome run_sweep(const ScenarioConfig& base, const std::vector<SweepAxis>& axes,
                       int threads = 1);

// Full-precision locale-independent scientific formatting used in every CSV.
std::string format_double(double value);

// Keep the leading axis column plus the named columns, in table order.
std::string filter_csv_columns(const std::string& csv, const std::vector<std::string>& keep);

// "1:6:0.1" -> {from, to, step}; used by the CLI --sweep flag.
SweepAxis parse_axis_spec(const std::string& parameter, const std::string& range_spec);

}  // namespace gpassivity
