#include "gengrid/record.hpp"

namespace gengrid {

std::optional<CellId> TrialRecord::cell_of(std::size_t robot, std::size_t tick) const {
    if (robot >= occupancy.size() || tick >= occupancy[robot].size()) return std::nullopt;
    const int flat = occupancy[robot][tick];
    if (flat < 0 || cols <= 0) return std::nullopt;
    return CellId{flat / cols, flat % cols};
}

std::optional<CellId> TrialRecord::final_cell(std::size_t robot) const {
    if (robot >= occupancy.size()) return std::nullopt;
    // Last tick the robot was on the grid.
    const auto& row = occupancy[robot];
    for (auto it = row.rbegin(); it != row.rend(); ++it) {
        if (*it >= 0) return CellId{*it / cols, *it % cols};
    }
    return std::nullopt;
}

std::string to_string(HopDirection d) {
    switch (d) {
        case HopDirection::N: return "N";
        case HopDirection::E: return "E";
        case HopDirection::S: return "S";
        case HopDirection::W: return "W";
        case HopDirection::Stay: return "stay";
        case HopDirection::Other: return "other";
    }
    return "?";
}

}  // namespace gengrid
