#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gengrid/record.hpp"

namespace gengrid::telemetry {

inline constexpr int kReportSchema = 1;

/// Throws ValidationError on empty input.
ProbabilityMap hop_probability_map(std::span<const TrialRecord> records);
Heatmap occupancy_heatmap(std::span<const TrialRecord> records);

/// FNV-1a 64 over a little-endian serialisation of occupancy and hop events,
/// rendered as 16 lowercase hex digits.
std::string trace_hash(const TrialRecord& record);

std::string report_json(const ExperimentReport& report);
std::string probmap_json(const ProbabilityMap& map);
std::string trials_csv(const ExperimentReport& report);
std::string heatmap_csv(const Heatmap& heatmap);

/// Writes report.json, trials.csv, probmap.json and heatmap.csv into `dir`
/// (created if missing). Throws IoError naming the path.
std::vector<std::filesystem::path> export_report(const ExperimentReport& report,
                                                 const std::filesystem::path& dir);

/// One parsed trials.csv row.
struct TrialRow {
    int index = 0;
    std::uint64_t seed = 0;
    bool success = false;
    std::vector<std::optional<CellId>> final_cells;
    int hops = 0;
    std::uint64_t wall_ticks = 0;
};

/// Throws ParseError.
std::vector<TrialRow> parse_trials_csv(const std::string& text);

}  // namespace gengrid::telemetry
