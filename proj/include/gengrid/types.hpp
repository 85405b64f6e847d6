#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "gengrid/error.hpp"

namespace gengrid {

/// Von Neumann directions. Row 0 is the north edge, col 0 the west edge.
enum class Side : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

inline constexpr std::array<Side, 4> kSides{Side::N, Side::E, Side::S, Side::W};

constexpr Side opposite(Side s) noexcept {
    return static_cast<Side>((static_cast<int>(s) + 2) % 4);
}

constexpr int side_drow(Side s) noexcept {
    return s == Side::N ? -1 : (s == Side::S ? 1 : 0);
}

constexpr int side_dcol(Side s) noexcept {
    return s == Side::E ? 1 : (s == Side::W ? -1 : 0);
}

/// Heading of a world direction, radians counter-clockwise from east (north-up view).
double side_heading(Side s) noexcept;

std::string_view to_string(Side s) noexcept;
Side side_from_string(std::string_view text);

struct CellId {
    int row = 0;
    int col = 0;

    friend constexpr auto operator<=>(const CellId&, const CellId&) = default;
};

constexpr CellId neighbor_of(CellId id, Side s) noexcept {
    return {id.row + side_drow(s), id.col + side_dcol(s)};
}

constexpr int manhattan(CellId a, CellId b) noexcept {
    const int dr = a.row - b.row;
    const int dc = a.col - b.col;
    return (dr < 0 ? -dr : dr) + (dc < 0 ? -dc : dc);
}

std::string to_string(CellId id);

/// PWM duty percentage, integer 0..100.
class Intensity {
public:
    constexpr Intensity() = default;

    /// Throws ValidationError outside [0, 100].
    explicit Intensity(int value);

    static constexpr Intensity clamped(int value) noexcept {
        Intensity i;
        i.value_ = value < 0 ? 0 : (value > 100 ? 100 : value);
        return i;
    }
    static constexpr Intensity full() noexcept { return clamped(100); }
    static constexpr Intensity off() noexcept { return Intensity{}; }

    constexpr int value() const noexcept { return value_; }

    friend constexpr auto operator<=>(const Intensity&, const Intensity&) = default;

private:
    int value_ = 0;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

/// Wrap an angle into [-pi, pi).
double normalize_angle(double theta) noexcept;

}  // namespace gengrid
