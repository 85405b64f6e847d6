#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gengrid/rng.hpp"
#include "gengrid/types.hpp"

namespace gengrid {

/// The five PWM LEDs: one at the center, one near each corner.
enum class PwmChannel : std::uint8_t { Center = 0, NE = 1, NW = 2, SE = 3, SW = 4 };

struct LedBank {
    std::array<Intensity, 5> pwm{};
    std::array<bool, 4> side{};  // indexed by Side

    Intensity center() const noexcept { return pwm[0]; }
    Intensity& operator[](PwmChannel ch) noexcept { return pwm[static_cast<std::size_t>(ch)]; }
    Intensity operator[](PwmChannel ch) const noexcept { return pwm[static_cast<std::size_t>(ch)]; }
    bool side_on(Side s) const noexcept { return side[static_cast<std::size_t>(s)]; }

    void set_all_pwm(Intensity v) noexcept { pwm.fill(v); }
    void set_all_sides(bool on) noexcept { side.fill(on); }
    int pwm_total() const noexcept;

    static LedBank dark() noexcept { return {}; }
    /// All nine LEDs on: five PWM at 100 and the four side LEDs.
    static LedBank all_on() noexcept;

    friend bool operator==(const LedBank&, const LedBank&) = default;
};

struct HallReading {
    double level = 0.0;  // normalised field strength in [0, 1]
    friend bool operator==(const HallReading&, const HallReading&) = default;
};

/// Brightness each side's LDR perceives from the facing neighbour.
struct LdrReading {
    std::array<Intensity, 4> side{};

    Intensity operator[](Side s) const noexcept { return side[static_cast<std::size_t>(s)]; }
    Intensity max() const noexcept;

    friend bool operator==(const LdrReading&, const LdrReading&) = default;
};

enum class ProgramKind : std::uint8_t {
    StaticIntensity,
    VirtualWall,
    TransportController,
    ShepherdResponder,
    PheromoneCA,
    Inert,
};

std::string_view to_string(ProgramKind k) noexcept;
ProgramKind program_kind_from_string(std::string_view text);

/// Firmware loaded onto a cell. `params` keys are program specific; see the
/// *Params structs below for the recognised keys and defaults.
struct CellProgram {
    ProgramKind kind = ProgramKind::Inert;
    std::map<std::string, double> params;

    static CellProgram inert() { return {}; }
    static CellProgram of(ProgramKind k, std::map<std::string, double> p = {}) {
        return {k, std::move(p)};
    }

    friend bool operator==(const CellProgram&, const CellProgram&) = default;
};

/// Throws ValidationError for unknown keys or out-of-range values.
void validate_program(const CellProgram& program);

struct PheromoneParams {
    double hall_threshold = 0.5;
    int decay = 20;  // intensity units per tick

    /// Reads "hall_threshold" and "decay"; throws ValidationError.
    static PheromoneParams from(const CellProgram& program);
};

struct TransportParams {
    double hall_threshold = 0.5;
    int signal_level = 100;  // LDR level read as a neighbour's occupancy signal
    static TransportParams from(const CellProgram& program);
};

struct ShepherdParams {
    double hall_threshold = 0.5;
    static ShepherdParams from(const CellProgram& program);
};

struct WallParams {
    int intensity = 100;
    static WallParams from(const CellProgram& program);
};

struct Cell {
    CellId id;
    LedBank leds;
    HallReading hall;
    LdrReading ldr;
    CellProgram program;
    bool faulted = false;
};

/// Scalar the neighbour on side `facing` of `cell` perceives through its LDR:
/// max of the PWM channels, saturated to 100 when the side LED facing that
/// neighbour is on.
Intensity broadcast_brightness(const Cell& cell, Side facing) noexcept;

/// Pure update rules, one per program. Each reads only the cell's own
/// receivers and returns its next LED state.
LedBank pheromone_ca_update(const Cell& self, const PheromoneParams& params) noexcept;
LedBank transport_controller_update(const Cell& self, const TransportParams& params) noexcept;
LedBank shepherd_responder_update(const Cell& self, const ShepherdParams& params) noexcept;
LedBank virtual_wall_update(const Cell& self, const WallParams& params) noexcept;

/// Evaluates the cell's program against its current receivers. Throws on
/// invalid program parameters.
LedBank run_program(const Cell& self);

struct CellFault {
    CellId id;
    std::uint64_t tick = 0;
    std::string message;
};

struct StepOptions {
    /// Evaluation order as flat cell indices; must be a permutation when set.
    std::optional<std::vector<std::size_t>> order;
    /// Phase-jitter mode: each cell independently skips its update with this
    /// probability. Requires `rng`.
    double skip_probability = 0.0;
    Rng* rng = nullptr;
    std::uint64_t tick = 0;
};

class Grid {
public:
    /// Throws ValidationError when rows or cols is < 1.
    Grid(int rows, int cols, const CellProgram& default_program = CellProgram::inert());

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return cells_.size(); }

    bool contains(CellId id) const noexcept {
        return id.row >= 0 && id.row < rows_ && id.col >= 0 && id.col < cols_;
    }
    /// Throws LookupError when out of range.
    std::size_t index_of(CellId id) const;
    CellId id_at(std::size_t index) const noexcept {
        return {static_cast<int>(index) / cols_, static_cast<int>(index) % cols_};
    }

    const Cell& cell(CellId id) const { return cells_[index_of(id)]; }
    Cell& cell(CellId id) { return cells_[index_of(id)]; }
    std::span<const Cell> cells() const noexcept { return cells_; }
    std::span<Cell> cells() noexcept { return cells_; }

    /// In-grid von Neumann neighbours in N, E, S, W order. Throws LookupError.
    std::vector<std::pair<Side, CellId>> neighbors(CellId id) const;

    /// Throws ValidationError for an out-of-range id or value.
    void set_center_intensity(CellId id, int value);
    void set_program(CellId id, CellProgram program);

    void set_hall(CellId id, HallReading reading);
    void clear_hall() noexcept;

    /// Snapshot every LDR from the neighbours' current LEDs (0 off-grid).
    void sense_ldr() noexcept;

    /// Runs every program once against the receivers as they are now.
    /// A program that throws faults its cell: LEDs off, program Inert.
    void step(const StepOptions& options = {});

    std::span<const CellFault> faults() const noexcept { return faults_; }
    /// Sum of all PWM channels over the grid.
    long total_brightness() const noexcept;

    friend bool operator==(const Grid& a, const Grid& b);

private:
    int rows_;
    int cols_;
    std::vector<Cell> cells_;
    std::vector<CellFault> faults_;
};

/// build_grid in free-function form.
inline Grid build_grid(int rows, int cols, const CellProgram& default_program) {
    return Grid(rows, cols, default_program);
}

}  // namespace gengrid
