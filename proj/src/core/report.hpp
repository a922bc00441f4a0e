#pragma once

#include <string>

#include "core/bench.hpp"
#include "core/result.hpp"

namespace h3ps::bench {

/// Writes a report into `dir`:
///   summary.csv            one row per run, fixed column order
///   report.json            the full report, machine-readable
///   tput_<p>_rep<r>_<c>.csv  200 ms series per connection (when recorded)
///   cpu_<p>_rep<r>.csv     resource samples (when recorded)
///   paired_first_data.csv  per-size h3/mqtt deltas (both-protocol sweeps)
/// Returns a human-readable reason on I/O failure.
Result<Unit, std::string> write_report(const MetricsReport& report, const std::string& dir);

std::string summary_csv(const MetricsReport& report);
std::string report_json(const MetricsReport& report);

/// Reloads a written report directory (report.json is authoritative).
Result<MetricsReport, std::string> load_report(const std::string& dir);

/// Renders the comparison table `bench report <dir>` prints.
std::string render_table(const MetricsReport& report);

/// Parses a scenario config from JSON (the C API entry point). Unknown keys
/// are rejected so typos fail loudly.
Result<ScenarioConfig, std::string> config_from_json(const std::string& text);
std::string config_to_json(const ScenarioConfig& cfg);

}  // namespace h3ps::bench
