#include "gengrid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gengrid/telemetry.hpp"

namespace gengrid::scenarios {

namespace {

double param_or(const SuccessSpec& s, const char* key, double fallback) {
    auto it = s.params.find(key);
    return it == s.params.end() ? fallback : it->second;
}

Grid build_spec_grid(const ScenarioSpec& spec) {
    Grid grid(spec.world.rows, spec.world.cols, spec.default_program);
    for (const auto& o : spec.programs) grid.set_program(o.cell, o.program);
    for (int r = 0; r < spec.world.rows; ++r) {
        for (int c = 0; c < spec.world.cols; ++c) {
            grid.set_center_intensity({r, c}, spec.center_intensity({r, c}));
        }
    }
    return grid;
}

/// Neighbour the gradient climber should end on, nullopt when no unique maximum
/// above the start exists.
std::optional<CellId> designated_neighbor(const ScenarioSpec& spec, CellId start) {
    const int here = spec.center_intensity(start);
    std::optional<CellId> best;
    int best_value = here;
    bool tie = false;
    for (Side s : kSides) {
        const CellId n = neighbor_of(start, s);
        if (n.row < 0 || n.row >= spec.world.rows || n.col < 0 || n.col >= spec.world.cols) continue;
        const int v = spec.center_intensity(n);
        if (v > best_value) {
            best_value = v;
            best = n;
            tie = false;
        } else if (best && v == best_value) {
            tie = true;
        }
    }
    if (tie) return std::nullopt;
    return best;
}

std::optional<CellId> global_maximum(const ScenarioSpec& spec) {
    std::optional<CellId> best;
    int best_value = -1;
    bool tie = false;
    for (int r = 0; r < spec.world.rows; ++r) {
        for (int c = 0; c < spec.world.cols; ++c) {
            const int v = spec.center_intensity({r, c});
            if (v > best_value) {
                best_value = v;
                best = CellId{r, c};
                tie = false;
            } else if (v == best_value) {
                tie = true;
            }
        }
    }
    if (tie) return std::nullopt;
    return best;
}

std::vector<CellId> lit_transport_cells(const Grid& grid) {
    std::vector<CellId> out;
    for (const auto& cell : grid.cells()) {
        if (cell.program.kind == ProgramKind::TransportController && cell.leds.center().value() > 0) {
            out.push_back(cell.id);
        }
    }
    return out;
}

}  // namespace

int ScenarioSpec::center_intensity(CellId id) const {
    if (intensities.empty()) return 0;
    return intensities.at(static_cast<std::size_t>(id.row)).at(static_cast<std::size_t>(id.col));
}

CellProgram ScenarioSpec::program_at(CellId id) const {
    CellProgram p = default_program;
    for (const auto& o : programs) {
        if (o.cell == id) p = o.program;
    }
    return p;
}

std::vector<CellId> ScenarioSpec::wall_cells() const {
    std::vector<CellId> out;
    for (int r = 0; r < world.rows; ++r) {
        for (int c = 0; c < world.cols; ++c) {
            if (program_at({r, c}).kind == ProgramKind::VirtualWall) out.push_back({r, c});
        }
    }
    return out;
}

std::size_t ScenarioSpec::start_variants() const {
    std::size_t n = 1;
    for (const auto& r : robots) n = std::max(n, r.starts.size());
    return n;
}

Simulation::Simulation(const ScenarioSpec& spec, int trial_index)
    : spec_(spec),
      world_(spec.world, build_spec_grid(spec)),
      rng_(derive_seed(spec.seed, static_cast<std::uint64_t>(trial_index))) {
    const behaviors::MotionProfile profile{spec.world.kinematics, spec.world.cell_pitch_mm};
    for (std::size_t i = 0; i < spec.robots.size(); ++i) {
        const auto& rs = spec.robots[i];
        const Pose pose = rs.starts[static_cast<std::size_t>(trial_index) % rs.starts.size()];
        Robot robot = make_robot(static_cast<int>(i), pose, spec.world.cell_pitch_mm, rs.name);
        robot.magnet = rs.magnet;
        world_.add_robot(std::move(robot));
        controllers_.emplace_back(rs.behavior,
                                  behaviors::BehaviorState{behaviors::nearest_side(pose.theta), 0},
                                  profile);
    }
    hop_origin_.assign(spec.robots.size(), std::nullopt);
    hop_start_tick_.assign(spec.robots.size(), 0);

    const Grid& grid = world_.grid();
    wall_.assign(grid.size(), false);
    for (const auto& w : spec.wall_cells()) wall_[grid.index_of(w)] = true;
    last_center_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) last_center_[i] = grid.cells()[i].leds.center().value();

    record_.index = trial_index;
    record_.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(trial_index));
    record_.rows = spec.world.rows;
    record_.cols = spec.world.cols;
    record_.occupancy.assign(spec.robots.size(), {});
    for (auto& row : record_.occupancy) row.reserve(spec.duration_ticks + 1);
    record_.brightness.reserve(spec.duration_ticks + 1);
    record_tick();
}

void Simulation::record_tick() {
    const Grid& grid = world_.grid();
    for (const auto& robot : world_.robots()) {
        int flat = -1;
        if (robot.present) {
            if (auto c = world_.cell_at({robot.pose.x, robot.pose.y})) {
                flat = static_cast<int>(grid.index_of(*c));
                ++record_.robot_ticks;
                if (wall_[static_cast<std::size_t>(flat)]) ++record_.wall_ticks;
            }
        }
        record_.occupancy[static_cast<std::size_t>(robot.id)].push_back(flat);
    }
    record_.brightness.push_back(grid.total_brightness());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const int v = grid.cells()[i].leds.center().value();
        if (v != last_center_[i]) {
            last_center_[i] = v;
            record_.light_history.push_back({world_.tick(), grid.id_at(i), v});
        }
    }
    if (!first_object_) {
        const auto lit = lit_transport_cells(grid);
        if (lit.size() == 1) first_object_ = lit.front();
    }
}

void Simulation::step() {
    if (finished()) return;
    const std::uint64_t t = world_.tick();

    for (std::size_t i = 0; i < spec_.robots.size(); ++i) {
        const auto lift = spec_.robots[i].lift_at_tick;
        if (lift && *lift == t && world_.robot(static_cast<int>(i)).present) {
            world_.lift_robot(static_cast<int>(i));
        }
    }
    if (magnet_scripted()) {
        const auto pos = spec_.magnet.position_at(t);
        if (!pos) {
            world_.remove_free_magnet();
        } else if (world_.free_magnet()) {
            world_.move_free_magnet(*pos);
        } else {
            world_.place_free_magnet(*pos, spec_.magnet.spec);
        }
    }

    world_.sense_cells();
    StepOptions opts;
    opts.tick = t;
    world_.grid().step(opts);

    for (std::size_t i = 0; i < controllers_.size(); ++i) {
        Robot& robot = world_.robot(static_cast<int>(i));
        const auto ev = controllers_[i].update(world_, robot, rng_);
        if (ev.kind == behaviors::ControllerEvent::Kind::HopStarted) {
            hop_origin_[i] = world_.cell_at({robot.pose.x, robot.pose.y});
            hop_start_tick_[i] = t;
        } else if (ev.kind == behaviors::ControllerEvent::Kind::HopFinished) {
            const auto to = world_.cell_at({robot.pose.x, robot.pose.y});
            if (hop_origin_[i] && to) {
                record_.hops.push_back({static_cast<int>(i), *hop_origin_[i], *to, hop_start_tick_[i], t});
            }
            hop_origin_[i].reset();
        }
    }

    world_.advance(rng_);
    record_tick();
}

void Simulation::run_to_end() {
    while (!finished()) step();
}

TrialRecord Simulation::finish() {
    run_to_end();
    TrialRecord rec = record_;
    const auto& pred = spec_.success.predicate;
    const std::size_t n = world_.robots().size();
    bool ok = true;
    std::string detail;

    if (pred == "max_neighbor") {
        for (std::size_t r = 0; r < n; ++r) {
            const auto start = rec.start_cell(r);
            const auto end = rec.final_cell(r);
            if (!start || !end) {
                ok = false;
                continue;
            }
            const auto target = designated_neighbor(spec_, *start).value_or(*start);
            if (*end != target) {
                ok = false;
                detail += "robot " + std::to_string(r) + " ended at " + to_string(*end) + ", expected " +
                          to_string(target) + "; ";
            }
        }
    } else if (pred == "reach_max") {
        std::optional<CellId> target;
        if (spec_.success.params.contains("row") && spec_.success.params.contains("col")) {
            target = CellId{static_cast<int>(param_or(spec_.success, "row", 0)),
                            static_cast<int>(param_or(spec_.success, "col", 0))};
        } else {
            target = global_maximum(spec_);
        }
        for (std::size_t r = 0; r < n; ++r) {
            const auto end = rec.final_cell(r);
            if (!target || !end || *end != *target) ok = false;
        }
        if (!ok) detail = "terminus not reached";
    } else if (pred == "avoid_walls") {
        ok = rec.wall_ticks == 0;
        if (!ok) detail = std::to_string(rec.wall_ticks) + " robot-ticks on wall cells";
    } else if (pred == "transport") {
        const int columns = static_cast<int>(param_or(spec_.success, "columns", 4));
        const auto lit = lit_transport_cells(world_.grid());
        if (!first_object_ || lit.size() != 1) {
            ok = false;
            detail = "object cell not unique at end (" + std::to_string(lit.size()) + " lit)";
        } else {
            const CellId obj = lit.front();
            const Side axis = spec_.robots.empty() ? Side::E : spec_.robots.front().behavior.params.transport_axis;
            const int advance = (obj.row - first_object_->row) * side_drow(axis) +
                                (obj.col - first_object_->col) * side_dcol(axis);
            if (advance != columns) {
                ok = false;
                detail = "object advanced " + std::to_string(advance);
            }
            const CellId ahead = neighbor_of(obj, axis);
            const CellId behind = neighbor_of(obj, opposite(axis));
            bool has_ahead = false;
            bool has_behind = false;
            for (std::size_t r = 0; r < n; ++r) {
                const auto end = rec.final_cell(r);
                if (end && *end == ahead) has_ahead = true;
                if (end && *end == behind) has_behind = true;
            }
            if (!has_ahead || !has_behind) {
                ok = false;
                detail += " robots not flanking the object";
            }
        }
    } else if (pred == "flee") {
        const int column = static_cast<int>(param_or(spec_.success, "column", 0));
        const int min_distance = static_cast<int>(param_or(spec_.success, "min_distance", 2));
        for (std::size_t r = 0; r < n; ++r) {
            const auto end = rec.final_cell(r);
            if (!end || std::abs(end->col - column) < min_distance) ok = false;
        }
        if (!ok) detail = "a robot stayed within reach of the magnet path";
    } else if (pred == "evaporate") {
        std::uint64_t from = 0;
        if (spec_.success.params.contains("from_tick")) {
            from = static_cast<std::uint64_t>(param_or(spec_.success, "from_tick", 0));
        } else {
            from = std::numeric_limits<std::uint64_t>::max();
            for (const auto& r : spec_.robots) {
                if (r.lift_at_tick) from = std::min(from, *r.lift_at_tick);
            }
        }
        const auto within = static_cast<std::uint64_t>(param_or(spec_.success, "within", 13));
        const auto& b = rec.brightness;
        if (from >= b.size() || from + within >= b.size()) {
            ok = false;
            detail = "run too short for the evaporation window";
        } else {
            for (std::size_t k = from; k + 1 < b.size(); ++k) {
                if (b[k] > 0 && b[k + 1] >= b[k]) {
                    ok = false;
                    detail = "brightness did not decrease at tick " + std::to_string(k + 1);
                    break;
                }
                if (b[k] == 0 && b[k + 1] != 0) {
                    ok = false;
                    detail = "brightness returned at tick " + std::to_string(k + 1);
                    break;
                }
            }
            if (b[from + within] != 0) {
                ok = false;
                detail += " still lit at tick " + std::to_string(from + within);
            }
        }
    } else if (pred == "sensor_match") {
        const Grid& grid = world_.grid();
        auto value = [&](CellId c) { return grid.contains(c) ? grid.cell(c).leds.center().value() : 0; };
        for (const auto& robot : world_.robots()) {
            const auto here = world_.cell_at({robot.pose.x, robot.pose.y});
            if (!here) {
                ok = false;
                continue;
            }
            const Side h = behaviors::nearest_side(robot.pose.theta);
            const auto frame = world_.robot_readings(robot);
            const SensorSlot slots[] = {SensorSlot::Front, SensorSlot::Right, SensorSlot::Back, SensorSlot::Left};
            const behaviors::RelSide rels[] = {behaviors::RelSide::Front, behaviors::RelSide::Right,
                                               behaviors::RelSide::Back, behaviors::RelSide::Left};
            if (frame[SensorSlot::Center].value() != value(*here)) ok = false;
            for (int k = 0; k < 4; ++k) {
                const CellId n = neighbor_of(*here, behaviors::resolve(rels[k], h));
                if (frame[slots[k]].value() != value(n)) ok = false;
            }
        }
        if (!ok) detail = "readings differ from the cell map";
    }
    rec.success = ok;
    rec.detail = detail;
    return rec;
}

TrialRecord run_trial(const ScenarioSpec& spec, int trial_index) {
    Simulation sim(spec, trial_index);
    return sim.finish();
}

ExperimentReport aggregate(const ScenarioSpec& spec, std::vector<TrialRecord> records) {
    ExperimentReport rep;
    rep.name = spec.name;
    rep.figure = spec.figure;
    rep.predicate = spec.success.predicate;
    rep.seed = spec.seed;
    rep.noise = spec.world.noise;
    std::sort(records.begin(), records.end(),
              [](const TrialRecord& a, const TrialRecord& b) { return a.index < b.index; });
    for (const auto& r : records) {
        if (r.success) ++rep.successes;
        rep.total_robot_ticks += r.robot_ticks;
        rep.safe_robot_ticks += r.robot_ticks - r.wall_ticks;
        if (auto start = r.start_cell(0)) {
            auto& s = rep.per_start[*start];
            ++s.trials;
            if (r.success) ++s.successes;
        }
    }
    if (!records.empty()) {
        rep.success_rate = static_cast<double>(rep.successes) / static_cast<double>(records.size());
        rep.probability_map = telemetry::hop_probability_map(records);
        rep.heatmap = telemetry::occupancy_heatmap(records);
    }
    rep.safe_fraction = rep.total_robot_ticks
                            ? static_cast<double>(rep.safe_robot_ticks) / static_cast<double>(rep.total_robot_ticks)
                            : 0.0;
    rep.records = std::move(records);
    return rep;
}

ExperimentReport run_experiment(ScenarioSpec spec, const RunOptions& options) {
    if (options.trials) {
        if (*options.trials < 1) throw ValidationError("trials must be >= 1");
        spec.trials = *options.trials;
    }
    if (options.seed) spec.seed = *options.seed;
    if (options.noiseless) {
        spec.world.noise = {};
        spec.calibrated_noise = false;
    }
    std::vector<TrialRecord> records;
    records.reserve(static_cast<std::size_t>(spec.trials));
    for (int i = 0; i < spec.trials; ++i) records.push_back(run_trial(spec, i));
    return aggregate(spec, std::move(records));
}

CalibrationResult calibrate_noise(const CalibrationTargets& targets, const CalibrationOptions& options) {
    if (targets.single_hop < 0.0 || targets.single_hop > 1.0 || targets.path < 0.0 || targets.path > 1.0) {
        throw ValidationError("calibration targets must lie in [0, 1]");
    }
    if (options.budget < 1) throw ValidationError("calibration budget must be >= 1");

    ScenarioSpec hop = builtin_scenario("single_hop");
    ScenarioSpec path = builtin_scenario("path2d");
    hop.seed = options.seed;
    path.seed = options.seed;

    CalibrationResult best;
    best.residual = std::numeric_limits<double>::infinity();
    int evals = 0;
    auto evaluate = [&](double rot, double drive) {
        NoiseModel noise{rot, drive, 0.0};
        hop.world.noise = noise;
        path.world.noise = noise;
        const double s = run_experiment(hop, {options.trials, std::nullopt, false}).success_rate;
        const double p = run_experiment(path, {options.trials, std::nullopt, false}).success_rate;
        ++evals;
        const double err = (s - targets.single_hop) * (s - targets.single_hop) +
                           (p - targets.path) * (p - targets.path);
        if (err < best.residual) {
            best.noise = noise;
            best.single_hop_rate = s;
            best.path_rate = p;
            best.residual = err;
        }
        return err;
    };

    double x = 0.0;
    double y = 0.0;
    double fx = evaluate(x, y);
    double step_x = options.max_sigma_rot / 4.0;
    double step_y = options.max_sigma_drive / 4.0;
    const double min_step_x = options.max_sigma_rot / 256.0;
    const double min_step_y = options.max_sigma_drive / 256.0;
    while (fx > 0.0 && evals < options.budget && (step_x >= min_step_x || step_y >= min_step_y)) {
        bool moved = false;
        const double candidates[4][2] = {{step_x, 0}, {-step_x, 0}, {0, step_y}, {0, -step_y}};
        for (const auto& d : candidates) {
            if (evals >= options.budget) break;
            if (d[0] == 0.0 && d[1] == 0.0) continue;
            const double nx = std::clamp(x + d[0], 0.0, options.max_sigma_rot);
            const double ny = std::clamp(y + d[1], 0.0, options.max_sigma_drive);
            if (nx == x && ny == y) continue;
            const double f = evaluate(nx, ny);
            if (f < fx) {
                x = nx;
                y = ny;
                fx = f;
                moved = true;
                break;
            }
        }
        if (!moved) {
            step_x /= 2.0;
            step_y /= 2.0;
        }
    }
    best.evaluations = evals;
    best.residual_flag = std::abs(best.single_hop_rate - targets.single_hop) > options.tolerance ||
                         std::abs(best.path_rate - targets.path) > options.tolerance;
    return best;
}

}  // namespace gengrid::scenarios
