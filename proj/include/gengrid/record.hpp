#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gengrid/types.hpp"
#include "gengrid/world.hpp"

namespace gengrid {

/// One executed hop plan: cell at decision time and cell once the drive ended.
struct HopEvent {
    int robot = 0;
    CellId from;
    CellId to;
    std::uint64_t start_tick = 0;
    std::uint64_t end_tick = 0;

    friend bool operator==(const HopEvent&, const HopEvent&) = default;
};

struct LightChange {
    std::uint64_t tick = 0;
    CellId cell;
    int intensity = 0;

    friend bool operator==(const LightChange&, const LightChange&) = default;
};

struct TrialRecord {
    int index = 0;
    std::uint64_t seed = 0;
    int rows = 0;
    int cols = 0;
    /// [robot][tick] flat cell index (row * cols + col), -1 when lifted off.
    /// Entry 0 is the initial placement, entry k the state after tick k.
    std::vector<std::vector<int>> occupancy;
    std::vector<HopEvent> hops;
    /// Center-channel changes after each tick (sparse).
    std::vector<LightChange> light_history;
    /// Sum of all PWM channels, same indexing as occupancy.
    std::vector<long> brightness;
    bool success = false;
    std::uint64_t wall_ticks = 0;   // robot-ticks spent on wall cells
    std::uint64_t robot_ticks = 0;  // robot-ticks on the grid
    std::string detail;             // predicate diagnostics

    std::optional<CellId> cell_of(std::size_t robot, std::size_t tick) const;
    std::optional<CellId> start_cell(std::size_t robot) const { return cell_of(robot, 0); }
    std::optional<CellId> final_cell(std::size_t robot) const;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

enum class HopDirection : std::uint8_t { N = 0, E = 1, S = 2, W = 3, Stay = 4, Other = 5 };
inline constexpr std::size_t kHopDirections = 6;
std::string to_string(HopDirection d);

struct CellDistribution {
    std::array<double, kHopDirections> probability{};
    std::array<int, kHopDirections> count{};
    int trials = 0;

    double operator[](HopDirection d) const noexcept {
        return probability[static_cast<std::size_t>(d)];
    }
    friend bool operator==(const CellDistribution&, const CellDistribution&) = default;
};

/// First-hop direction distribution per start cell.
struct ProbabilityMap {
    std::map<CellId, CellDistribution> cells;
    int trials = 0;
    friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;
};

/// Per-cell fraction of pooled robot-ticks.
struct Heatmap {
    int rows = 0;
    int cols = 0;
    std::vector<double> fraction;
    std::uint64_t samples = 0;

    double at(CellId id) const { return fraction.at(static_cast<std::size_t>(id.row * cols + id.col)); }
    friend bool operator==(const Heatmap&, const Heatmap&) = default;
};

struct StartStats {
    int trials = 0;
    int successes = 0;
    double rate() const noexcept { return trials ? static_cast<double>(successes) / trials : 0.0; }
    friend bool operator==(const StartStats&, const StartStats&) = default;
};

struct ExperimentReport {
    std::string name;
    std::string figure;
    std::string predicate;
    std::uint64_t seed = 0;
    NoiseModel noise;
    std::vector<TrialRecord> records;
    int successes = 0;
    double success_rate = 0.0;
    /// Success per robot-0 start cell.
    std::map<CellId, StartStats> per_start;
    ProbabilityMap probability_map;
    Heatmap heatmap;
    std::uint64_t total_robot_ticks = 0;
    std::uint64_t safe_robot_ticks = 0;  // not on a wall cell
    double safe_fraction = 0.0;

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

}  // namespace gengrid
