#include "gengrid/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace gengrid {

namespace {

double param_or(const CellProgram& p, const std::string& key, double fallback) {
    auto it = p.params.find(key);
    return it == p.params.end() ? fallback : it->second;
}

int integral_param(const CellProgram& p, const std::string& key, int fallback, int lo, int hi) {
    const double v = param_or(p, key, fallback);
    if (!std::isfinite(v) || v != std::floor(v) || v < lo || v > hi) {
        throw ValidationError(std::string(to_string(p.kind)) + ": parameter '" + key +
                              "' must be an integer in [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
    }
    return static_cast<int>(v);
}

double threshold_param(const CellProgram& p, const std::string& key, double fallback) {
    const double v = param_or(p, key, fallback);
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ValidationError(std::string(to_string(p.kind)) + ": parameter '" + key +
                              "' must be in [0, 1]");
    }
    return v;
}

const std::set<std::string>& allowed_keys(ProgramKind k) {
    static const std::set<std::string> none;
    static const std::set<std::string> pheromone{"hall_threshold", "decay"};
    static const std::set<std::string> transport{"hall_threshold", "signal_level"};
    static const std::set<std::string> shepherd{"hall_threshold"};
    static const std::set<std::string> wall{"intensity"};
    switch (k) {
        case ProgramKind::PheromoneCA: return pheromone;
        case ProgramKind::TransportController: return transport;
        case ProgramKind::ShepherdResponder: return shepherd;
        case ProgramKind::VirtualWall: return wall;
        default: return none;
    }
}

}  // namespace

int LedBank::pwm_total() const noexcept {
    int total = 0;
    for (auto v : pwm) total += v.value();
    return total;
}

LedBank LedBank::all_on() noexcept {
    LedBank b;
    b.set_all_pwm(Intensity::full());
    b.set_all_sides(true);
    return b;
}

Intensity LdrReading::max() const noexcept {
    return *std::max_element(side.begin(), side.end());
}

std::string_view to_string(ProgramKind k) noexcept {
    switch (k) {
        case ProgramKind::StaticIntensity: return "StaticIntensity";
        case ProgramKind::VirtualWall: return "VirtualWall";
        case ProgramKind::TransportController: return "TransportController";
        case ProgramKind::ShepherdResponder: return "ShepherdResponder";
        case ProgramKind::PheromoneCA: return "PheromoneCA";
        case ProgramKind::Inert: return "Inert";
    }
    return "?";
}

ProgramKind program_kind_from_string(std::string_view text) {
    for (auto k : {ProgramKind::StaticIntensity, ProgramKind::VirtualWall,
                   ProgramKind::TransportController, ProgramKind::ShepherdResponder,
                   ProgramKind::PheromoneCA, ProgramKind::Inert}) {
        if (to_string(k) == text) return k;
    }
    throw ValidationError("unknown cell program '" + std::string(text) + "'");
}

void validate_program(const CellProgram& program) {
    const auto& allowed = allowed_keys(program.kind);
    for (const auto& [key, value] : program.params) {
        if (!allowed.contains(key)) {
            throw ValidationError(std::string(to_string(program.kind)) +
                                  ": unknown parameter '" + key + "'");
        }
    }
    switch (program.kind) {
        case ProgramKind::PheromoneCA: (void)PheromoneParams::from(program); break;
        case ProgramKind::TransportController: (void)TransportParams::from(program); break;
        case ProgramKind::ShepherdResponder: (void)ShepherdParams::from(program); break;
        case ProgramKind::VirtualWall: (void)WallParams::from(program); break;
        default: break;
    }
}

PheromoneParams PheromoneParams::from(const CellProgram& program) {
    PheromoneParams p;
    p.hall_threshold = threshold_param(program, "hall_threshold", p.hall_threshold);
    p.decay = integral_param(program, "decay", p.decay, 0, 100);
    return p;
}

TransportParams TransportParams::from(const CellProgram& program) {
    TransportParams p;
    p.hall_threshold = threshold_param(program, "hall_threshold", p.hall_threshold);
    p.signal_level = integral_param(program, "signal_level", p.signal_level, 1, 100);
    return p;
}

ShepherdParams ShepherdParams::from(const CellProgram& program) {
    ShepherdParams p;
    p.hall_threshold = threshold_param(program, "hall_threshold", p.hall_threshold);
    return p;
}

WallParams WallParams::from(const CellProgram& program) {
    WallParams p;
    p.intensity = integral_param(program, "intensity", p.intensity, 0, 100);
    return p;
}

Intensity broadcast_brightness(const Cell& cell, Side facing) noexcept {
    if (cell.leds.side_on(facing)) return Intensity::full();
    return *std::max_element(cell.leds.pwm.begin(), cell.leds.pwm.end());
}

LedBank pheromone_ca_update(const Cell& self, const PheromoneParams& params) noexcept {
    // Only a deposit drives the side LEDs; a relayed cell signals through its
    // PWM level so that brightness falls by `decay` per lattice step.
    if (self.hall.level >= params.hall_threshold) return LedBank::all_on();
    LedBank next;
    next.set_all_pwm(Intensity::clamped(self.ldr.max().value() - params.decay));
    return next;
}

LedBank transport_controller_update(const Cell& self, const TransportParams& params) noexcept {
    LedBank next;
    if (self.hall.level >= params.hall_threshold) {
        // Occupied: advertise to the neighbours, stay dark.
        next.set_all_sides(true);
        return next;
    }
    if (self.ldr[Side::E].value() >= params.signal_level &&
        self.ldr[Side::W].value() >= params.signal_level) {
        next.set_all_pwm(Intensity::full());
    }
    return next;
}

LedBank shepherd_responder_update(const Cell& self, const ShepherdParams& params) noexcept {
    LedBank next;
    if (self.hall.level >= params.hall_threshold) next.set_all_pwm(Intensity::full());
    return next;
}

LedBank virtual_wall_update(const Cell& self, const WallParams& params) noexcept {
    LedBank next = self.leds;
    next.set_all_pwm(Intensity::clamped(params.intensity));
    return next;
}

LedBank run_program(const Cell& self) {
    const auto& allowed = allowed_keys(self.program.kind);
    for (const auto& entry : self.program.params) {
        if (!allowed.contains(entry.first)) {
            throw ValidationError(std::string(to_string(self.program.kind)) +
                                  ": unknown parameter '" + entry.first + "'");
        }
    }
    switch (self.program.kind) {
        case ProgramKind::StaticIntensity:
        case ProgramKind::Inert:
            return self.leds;
        case ProgramKind::VirtualWall:
            return virtual_wall_update(self, WallParams::from(self.program));
        case ProgramKind::TransportController:
            return transport_controller_update(self, TransportParams::from(self.program));
        case ProgramKind::ShepherdResponder:
            return shepherd_responder_update(self, ShepherdParams::from(self.program));
        case ProgramKind::PheromoneCA:
            return pheromone_ca_update(self, PheromoneParams::from(self.program));
    }
    return self.leds;
}

Grid::Grid(int rows, int cols, const CellProgram& default_program) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) {
        throw ValidationError("grid dimensions must be >= 1, got " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    }
    cells_.resize(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        cells_[i].id = id_at(i);
        cells_[i].program = default_program;
    }
}

std::size_t Grid::index_of(CellId id) const {
    if (!contains(id)) {
        throw LookupError("cell " + to_string(id) + " outside " + std::to_string(rows_) + "x" +
                          std::to_string(cols_) + " grid");
    }
    return static_cast<std::size_t>(id.row) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(id.col);
}

std::vector<std::pair<Side, CellId>> Grid::neighbors(CellId id) const {
    (void)index_of(id);
    std::vector<std::pair<Side, CellId>> out;
    out.reserve(4);
    for (Side s : kSides) {
        const CellId n = neighbor_of(id, s);
        if (contains(n)) out.emplace_back(s, n);
    }
    return out;
}

void Grid::set_center_intensity(CellId id, int value) {
    if (!contains(id)) throw ValidationError("cell " + to_string(id) + " outside the grid");
    const std::size_t i = index_of(id);
    cells_[i].leds[PwmChannel::Center] = Intensity(value);
}

void Grid::set_program(CellId id, CellProgram program) {
    auto& c = cells_[index_of(id)];
    c.program = std::move(program);
    c.faulted = false;
}

void Grid::set_hall(CellId id, HallReading reading) {
    cells_[index_of(id)].hall = reading;
}

void Grid::clear_hall() noexcept {
    for (auto& c : cells_) c.hall = {};
}

void Grid::sense_ldr() noexcept {
    for (auto& c : cells_) {
        for (Side s : kSides) {
            const CellId n = neighbor_of(c.id, s);
            Intensity seen;
            if (contains(n)) {
                const auto& nc = cells_[static_cast<std::size_t>(n.row * cols_ + n.col)];
                seen = broadcast_brightness(nc, opposite(s));
            }
            c.ldr.side[static_cast<std::size_t>(s)] = seen;
        }
    }
}

void Grid::step(const StepOptions& options) {
    std::vector<std::size_t> order;
    if (options.order) {
        order = *options.order;
        std::vector<std::size_t> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> expected(cells_.size());
        std::iota(expected.begin(), expected.end(), std::size_t{0});
        if (sorted != expected) throw ValidationError("step order is not a permutation of cells");
    } else {
        order.resize(cells_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
    }
    if (options.skip_probability > 0.0 && options.rng == nullptr) {
        throw ValidationError("phase jitter requires an rng");
    }

    // Programs only see `cells_` (tick-start inputs); outputs land in `next`.
    std::vector<LedBank> next(cells_.size());
    std::vector<bool> fault(cells_.size(), false);
    std::vector<std::string> why(cells_.size());
    for (std::size_t i : order) {
        const Cell& c = cells_[i];
        if (options.skip_probability > 0.0 && options.rng->uniform() < options.skip_probability) {
            next[i] = c.leds;
            continue;
        }
        try {
            next[i] = run_program(c);
        } catch (const std::exception& e) {
            fault[i] = true;
            why[i] = e.what();
        }
    }
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        if (fault[i]) {
            cells_[i].leds = LedBank::dark();
            cells_[i].program = CellProgram::inert();
            cells_[i].faulted = true;
            faults_.push_back({cells_[i].id, options.tick, why[i]});
        } else {
            cells_[i].leds = next[i];
        }
    }
}

long Grid::total_brightness() const noexcept {
    long total = 0;
    for (const auto& c : cells_) total += c.leds.pwm_total();
    return total;
}

bool operator==(const Grid& a, const Grid& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
    for (std::size_t i = 0; i < a.cells_.size(); ++i) {
        const auto& x = a.cells_[i];
        const auto& y = b.cells_[i];
        if (!(x.leds == y.leds) || !(x.hall == y.hall) || !(x.ldr == y.ldr) ||
            !(x.program == y.program) || x.faulted != y.faulted) {
            return false;
        }
    }
    return true;
}

}  // namespace gengrid
