#include "gengrid/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gengrid {

double Kinematics::t_rot90_ms() const noexcept {
    return (std::numbers::pi / 2.0) / rotation_rate_rad_s() * 1000.0;
}

void WorldConfig::validate() const {
    if (!(cell_pitch_mm > 0.0)) throw ValidationError("cell_pitch must be > 0");
    if (!(tick_ms > 0.0)) throw ValidationError("tick_dt must be > 0");
    if (rows < 1 || cols < 1) throw ValidationError("world rows/cols must be >= 1");
    if (noise.sigma_rot < 0.0 || noise.sigma_drive < 0.0 || noise.duty_mismatch < 0.0) {
        throw ValidationError("noise parameters must be >= 0");
    }
    if (!(kinematics.wheel_base_mm > 0.0) || !(kinematics.v_max_mm_s > 0.0)) {
        throw ValidationError("wheel base and v_max must be > 0");
    }
    if (std::abs(kinematics.drive_duty) > 100.0 || std::abs(kinematics.rotate_duty) > 100.0 ||
        kinematics.drive_duty <= 0.0 || kinematics.rotate_duty <= 0.0) {
        throw ValidationError("drive and rotate duties must be in (0, 100]");
    }
    if (light_bleed < 0.0 || light_bleed > 1.0) throw ValidationError("light_bleed in [0, 1]");
}

void MagnetSpec::validate() const {
    if (!(detect_radius_mm > 0.0)) throw ValidationError("magnet detect_radius must be > 0");
    if (!(strength > 0.0 && strength <= 1.0)) throw ValidationError("magnet strength in (0, 1]");
}

Robot make_robot(int id, Pose pose, double cell_pitch_mm, std::string name) {
    Robot r;
    r.id = id;
    r.name = name.empty() ? "robot" + std::to_string(id) : std::move(name);
    r.pose = pose;
    r.pose.theta = normalize_angle(pose.theta);
    const double p = cell_pitch_mm;
    r.sensor_offsets = {Vec2{0.0, 0.0}, Vec2{p, 0.0}, Vec2{-p, 0.0}, Vec2{0.0, p}, Vec2{0.0, -p}};
    return r;
}

World::World(WorldConfig config, Grid grid) : config_(config), grid_(std::move(grid)) {
    config_.validate();
    if (grid_.rows() != config_.rows || grid_.cols() != config_.cols) {
        throw ValidationError("grid is " + std::to_string(grid_.rows()) + "x" +
                              std::to_string(grid_.cols()) + " but world config is " +
                              std::to_string(config_.rows) + "x" + std::to_string(config_.cols));
    }
}

Robot& World::add_robot(Robot robot) {
    for (const auto& r : robots_) {
        if (r.id == robot.id) throw ValidationError("duplicate robot id " + std::to_string(robot.id));
    }
    robot.magnet.validate();
    robots_.push_back(std::move(robot));
    return robots_.back();
}

Robot& World::robot(int id) {
    for (auto& r : robots_) {
        if (r.id == id) return r;
    }
    throw LookupError("no robot with id " + std::to_string(id));
}

const Robot& World::robot(int id) const {
    for (const auto& r : robots_) {
        if (r.id == id) return r;
    }
    throw LookupError("no robot with id " + std::to_string(id));
}

void World::command(int robot_id, MotionCommand cmd) {
    if (std::abs(cmd.left_duty) > 100.0 || std::abs(cmd.right_duty) > 100.0 || cmd.duration_ms < 0.0) {
        throw ValidationError("motion command out of range");
    }
    auto& r = robot(robot_id);
    r.motor_cmd = cmd;
    r.command_started = false;
    r.command_mismatch = 0.0;
}

void World::lift_robot(int robot_id) {
    auto& r = robot(robot_id);
    r.present = false;
    r.motor_cmd.reset();
}

Vec2 World::cell_center(CellId id) const noexcept {
    return {(id.col + 0.5) * config_.cell_pitch_mm, (id.row + 0.5) * config_.cell_pitch_mm};
}

std::optional<CellId> World::cell_at(Vec2 p) const noexcept {
    if (!(p.x >= 0.0 && p.y >= 0.0)) return std::nullopt;
    const double col = std::floor(p.x / config_.cell_pitch_mm);
    const double row = std::floor(p.y / config_.cell_pitch_mm);
    if (col >= config_.cols || row >= config_.rows) return std::nullopt;
    return CellId{static_cast<int>(row), static_cast<int>(col)};
}

HallReading World::hall_level_at(CellId id) const {
    (void)grid_.index_of(id);
    const Vec2 c = cell_center(id);
    double level = 0.0;
    auto contribute = [&](Vec2 m, const MagnetSpec& spec) {
        const double d = std::hypot(m.x - c.x, m.y - c.y);
        level = std::max(level, spec.strength * std::max(0.0, 1.0 - d / spec.detect_radius_mm));
    };
    for (const auto& r : robots_) {
        if (r.present) contribute({r.pose.x, r.pose.y}, r.magnet);
    }
    if (free_magnet_) contribute(free_magnet_->position, free_magnet_->spec);
    return {level};
}

Intensity World::light_at(Vec2 p) const noexcept {
    const auto id = cell_at(p);
    if (!id) return Intensity::off();
    const int own = grid_.cells()[static_cast<std::size_t>(id->row * config_.cols + id->col)]
                        .leds.center().value();
    if (config_.light_bleed <= 0.0) return Intensity::clamped(own);
    int brightest = 0;
    for (Side s : kSides) {
        const CellId n = neighbor_of(*id, s);
        if (grid_.contains(n)) {
            brightest = std::max(brightest, grid_.cell(n).leds.center().value());
        }
    }
    const int bled = static_cast<int>(std::lround(config_.light_bleed * brightest));
    return Intensity::clamped(std::max(own, bled));
}

Vec2 World::sensor_position(const Robot& r, SensorSlot slot) const noexcept {
    const Vec2 off = r.sensor_offsets[static_cast<std::size_t>(slot)];
    const double c = std::cos(r.pose.theta);
    const double s = std::sin(r.pose.theta);
    // Body (forward, left) -> world (east, south): y grows southward.
    const double east = off.x * c - off.y * s;
    const double north = off.x * s + off.y * c;
    return {r.pose.x + east, r.pose.y - north};
}

SensorFrame World::robot_readings(const Robot& r) const noexcept {
    SensorFrame f;
    for (std::size_t i = 0; i < 5; ++i) {
        f.values[i] = light_at(sensor_position(r, static_cast<SensorSlot>(i)));
    }
    return f;
}

void World::place_free_magnet(Vec2 position, MagnetSpec spec) {
    spec.validate();
    free_magnet_ = FreeMagnet{position, spec};
}

bool World::move_free_magnet(Vec2 position) {
    if (!free_magnet_) return false;
    free_magnet_->position = position;
    return true;
}

bool World::remove_free_magnet() {
    if (!free_magnet_) return false;
    free_magnet_.reset();
    return true;
}

void World::sense_cells() {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const CellId id = grid_.id_at(i);
        grid_.set_hall(id, hall_level_at(id));
    }
    grid_.sense_ldr();
}

void World::advance(Rng& rng) {
    const double pitch = config_.cell_pitch_mm;
    // Robot centres stay within the hull of the outer cell centres (the
    // chassis rim meets the enclosure there).
    const double min_x = 0.5 * pitch;
    const double max_x = config_.extent_x() - 0.5 * pitch;
    const double min_y = 0.5 * pitch;
    const double max_y = config_.extent_y() - 0.5 * pitch;
    const auto& kin = config_.kinematics;
    const auto& noise = config_.noise;

    std::vector<Pose> before(robots_.size());
    for (std::size_t i = 0; i < robots_.size(); ++i) before[i] = robots_[i].pose;

    for (auto& r : robots_) {
        if (!r.present || !r.motor_cmd) continue;
        MotionCommand& cmd = *r.motor_cmd;
        if (cmd.duration_ms <= 0.0) {
            r.motor_cmd.reset();
            r.command_started = false;
            continue;
        }
        if (!r.command_started) {
            r.command_started = true;
            r.command_mismatch = noise.duty_mismatch > 0.0 ? rng.normal(noise.duty_mismatch) : 0.0;
            if (cmd.is_rotation() && noise.sigma_rot > 0.0) {
                r.pose.theta = normalize_angle(r.pose.theta + rng.normal(noise.sigma_rot));
            }
        }
        const double dt_ms = std::min(config_.tick_ms, cmd.duration_ms);
        const double dt = dt_ms / 1000.0;
        const double vl = cmd.left_duty / 100.0 * kin.v_max_mm_s * (1.0 + r.command_mismatch);
        const double vr = cmd.right_duty / 100.0 * kin.v_max_mm_s * (1.0 - r.command_mismatch);
        const double v = 0.5 * (vl + vr);
        const double w = (vr - vl) / kin.wheel_base_mm;

        const double mid = r.pose.theta + 0.5 * w * dt;
        r.pose.x += v * dt * std::cos(mid);
        r.pose.y -= v * dt * std::sin(mid);
        double theta = r.pose.theta + w * dt;
        if (cmd.is_straight() && noise.sigma_drive > 0.0) {
            theta += rng.normal(noise.sigma_drive * std::sqrt(std::abs(v) * dt));
        }
        r.pose.theta = normalize_angle(theta);
        r.pose.x = std::clamp(r.pose.x, min_x, max_x);
        r.pose.y = std::clamp(r.pose.y, min_y, max_y);

        cmd.duration_ms -= dt_ms;
        if (cmd.duration_ms <= 1e-9) {
            r.motor_cmd.reset();
            r.command_started = false;
        }
    }

    // Overlapping chassis that are closing in: both stop where they were.
    for (std::size_t i = 0; i < robots_.size(); ++i) {
        for (std::size_t j = i + 1; j < robots_.size(); ++j) {
            auto& a = robots_[i];
            auto& b = robots_[j];
            if (!a.present || !b.present) continue;
            const double reach = 0.5 * (a.chassis_diameter_mm + b.chassis_diameter_mm);
            const double d_new = std::hypot(a.pose.x - b.pose.x, a.pose.y - b.pose.y);
            const double d_old = std::hypot(before[i].x - before[j].x, before[i].y - before[j].y);
            if (d_new < reach && d_new < d_old) {
                a.pose = before[i];
                b.pose = before[j];
                a.motor_cmd.reset();
                b.motor_cmd.reset();
                a.command_started = b.command_started = false;
            }
        }
    }
    ++tick_;
}

}  // namespace gengrid
