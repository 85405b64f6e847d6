#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gengrid/grid.hpp"
#include "gengrid/rng.hpp"
#include "gengrid/types.hpp"

namespace gengrid {

/// Open-loop motion error. All zero => exactly deterministic kinematics.
struct NoiseModel {
    double sigma_rot = 0.0;      // rad, one draw per commanded rotation
    double sigma_drive = 0.0;    // rad per sqrt(mm) of straight travel (heading random walk)
    double duty_mismatch = 0.0;  // fractional left/right speed imbalance, one draw per command

    bool is_zero() const noexcept {
        return sigma_rot == 0.0 && sigma_drive == 0.0 && duty_mismatch == 0.0;
    }
    friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

struct Kinematics {
    double wheel_base_mm = 100.0;
    double v_max_mm_s = 150.0;   // wheel speed at 100% duty
    double drive_duty = 50.0;    // duty used for hops
    double rotate_duty = 50.0;   // duty used for in-place turns

    double drive_speed_mm_s() const noexcept { return drive_duty / 100.0 * v_max_mm_s; }
    /// Turn rate with wheels at +/- rotate_duty.
    double rotation_rate_rad_s() const noexcept {
        return 2.0 * (rotate_duty / 100.0) * v_max_mm_s / wheel_base_mm;
    }
    double t_rot90_ms() const noexcept;

    friend bool operator==(const Kinematics&, const Kinematics&) = default;
};

struct WorldConfig {
    double cell_pitch_mm = 75.0;
    int rows = 5;
    int cols = 5;
    NoiseModel noise;
    double tick_ms = 10.0;
    Kinematics kinematics;
    /// Fraction of a neighbouring cell's light seen across a cell edge. 0 disables.
    double light_bleed = 0.0;

    double extent_x() const noexcept { return cols * cell_pitch_mm; }
    double extent_y() const noexcept { return rows * cell_pitch_mm; }
    /// Throws ValidationError.
    void validate() const;
};

/// x east, y south, origin at the north-west grid corner; theta is measured
/// counter-clockwise from east as seen from above (north = +pi/2).
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    friend bool operator==(const Pose&, const Pose&) = default;
};

struct MagnetSpec {
    double diameter_mm = 20.0;
    double strength = 1.0;
    double detect_radius_mm = 37.5;

    void validate() const;
    friend bool operator==(const MagnetSpec&, const MagnetSpec&) = default;
};

struct MotionCommand {
    double left_duty = 0.0;   // -100..100
    double right_duty = 0.0;  // -100..100
    double duration_ms = 0.0;

    bool is_rotation() const noexcept { return left_duty == -right_duty && left_duty != 0.0; }
    bool is_straight() const noexcept { return left_duty == right_duty; }
    friend bool operator==(const MotionCommand&, const MotionCommand&) = default;
};

enum class SensorSlot : std::uint8_t { Center = 0, Front = 1, Back = 2, Left = 3, Right = 4 };

struct SensorFrame {
    std::array<Intensity, 5> values{};

    Intensity operator[](SensorSlot s) const noexcept { return values[static_cast<std::size_t>(s)]; }
    Intensity& operator[](SensorSlot s) noexcept { return values[static_cast<std::size_t>(s)]; }
    friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

struct Robot {
    int id = 0;
    std::string name;
    Pose pose;
    double chassis_diameter_mm = 122.0;
    MagnetSpec magnet;
    /// Body frame (forward, left) in mm, indexed by SensorSlot.
    std::array<Vec2, 5> sensor_offsets{};
    std::optional<MotionCommand> motor_cmd;
    bool present = true;  // false once lifted off the grid

    // Per-command noise state, drawn when a command starts.
    bool command_started = false;
    double command_mismatch = 0.0;
};

/// Robot with sensor offsets at one pitch, everything else default.
Robot make_robot(int id, Pose pose, double cell_pitch_mm, std::string name = {});

struct FreeMagnet {
    Vec2 position;
    MagnetSpec spec;
};

class World {
public:
    /// Grid dimensions must match the config. Throws ValidationError.
    World(WorldConfig config, Grid grid);

    const WorldConfig& config() const noexcept { return config_; }
    const Grid& grid() const noexcept { return grid_; }
    Grid& grid() noexcept { return grid_; }
    std::uint64_t tick() const noexcept { return tick_; }

    std::span<const Robot> robots() const noexcept { return robots_; }
    std::span<Robot> robots() noexcept { return robots_; }
    Robot& add_robot(Robot robot);
    /// Throws LookupError.
    Robot& robot(int id);
    const Robot& robot(int id) const;
    /// Replaces the robot's active command.
    void command(int robot_id, MotionCommand cmd);
    void lift_robot(int robot_id);

    Vec2 cell_center(CellId id) const noexcept;
    /// Floor mapping; a point on a shared edge belongs to the larger index.
    std::optional<CellId> cell_at(Vec2 p) const noexcept;

    HallReading hall_level_at(CellId id) const;
    Intensity light_at(Vec2 p) const noexcept;
    SensorFrame robot_readings(const Robot& r) const noexcept;
    Vec2 sensor_position(const Robot& r, SensorSlot slot) const noexcept;

    const std::optional<FreeMagnet>& free_magnet() const noexcept { return free_magnet_; }
    void place_free_magnet(Vec2 position, MagnetSpec spec = {});
    /// Returns false (no-op) when no magnet is placed.
    bool move_free_magnet(Vec2 position);
    bool remove_free_magnet();

    /// Pushes hall levels and LDR snapshots into the grid.
    void sense_cells();

    /// Integrates one tick of kinematics. All randomness comes from `rng`.
    void advance(Rng& rng);

private:
    WorldConfig config_;
    Grid grid_;
    std::vector<Robot> robots_;
    std::optional<FreeMagnet> free_magnet_;
    std::uint64_t tick_ = 0;
};

}  // namespace gengrid
