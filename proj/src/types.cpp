#include "gengrid/types.hpp"

#include <cmath>
#include <numbers>

namespace gengrid {

double side_heading(Side s) noexcept {
    switch (s) {
        case Side::N: return std::numbers::pi / 2.0;
        case Side::E: return 0.0;
        case Side::S: return -std::numbers::pi / 2.0;
        case Side::W: return -std::numbers::pi;
    }
    return 0.0;
}

std::string_view to_string(Side s) noexcept {
    switch (s) {
        case Side::N: return "N";
        case Side::E: return "E";
        case Side::S: return "S";
        case Side::W: return "W";
    }
    return "?";
}

Side side_from_string(std::string_view text) {
    if (text == "N") return Side::N;
    if (text == "E") return Side::E;
    if (text == "S") return Side::S;
    if (text == "W") return Side::W;
    throw ValidationError("unknown side '" + std::string(text) + "' (expected N, E, S or W)");
}

std::string to_string(CellId id) {
    return "(" + std::to_string(id.row) + "," + std::to_string(id.col) + ")";
}

Intensity::Intensity(int value) : value_(value) {
    if (value < 0 || value > 100) {
        throw ValidationError("intensity " + std::to_string(value) + " outside [0, 100]");
    }
}

double normalize_angle(double theta) noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double t = std::fmod(theta + std::numbers::pi, two_pi);
    if (t < 0.0) t += two_pi;
    t -= std::numbers::pi;
    // fmod can land exactly on +pi after the shift for inputs just below -pi.
    if (t >= std::numbers::pi) t -= two_pi;
    return t;
}

}  // namespace gengrid
