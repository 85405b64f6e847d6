#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include "gengrid/rng.hpp"
#include "gengrid/types.hpp"
#include "gengrid/world.hpp"

namespace gengrid::behaviors {

enum class BehaviorKind : std::uint8_t { GradientHop, RandomWalkAvoid, TransportFollower, FleeLight, Idle };

std::string_view to_string(BehaviorKind k) noexcept;
BehaviorKind behavior_kind_from_string(std::string_view text);

struct BehaviorParams {
    int wall_threshold = 100;   // RandomWalkAvoid: sides at or above are walls
    int flee_threshold = 50;    // FleeLight: sides above this are "lit"
    int object_threshold = 50;  // TransportFollower: lit object detection
    double settle_ms = 200.0;
    int max_hops = 0;           // 0 = unlimited
    Side transport_axis = Side::E;

    friend bool operator==(const BehaviorParams&, const BehaviorParams&) = default;
};

struct BehaviorSpec {
    BehaviorKind kind = BehaviorKind::Idle;
    BehaviorParams params;
    friend bool operator==(const BehaviorSpec&, const BehaviorSpec&) = default;
};

/// Robot-relative sides, listed in tie-break priority order.
enum class RelSide : std::uint8_t { Front = 0, Right = 1, Back = 2, Left = 3 };
inline constexpr std::array<RelSide, 4> kPriority{RelSide::Front, RelSide::Right, RelSide::Back,
                                                  RelSide::Left};

SensorSlot slot_of(RelSide s) noexcept;
/// World side a robot-relative side points to for a robot facing `heading`.
Side resolve(RelSide s, Side heading) noexcept;
/// Inverse of resolve().
RelSide relative(Side world, Side heading) noexcept;
/// Heading snapped to the nearest cardinal direction.
Side nearest_side(double theta) noexcept;

/// What an open-loop robot believes about itself: it never re-measures its
/// heading, it only tracks the turns it has commanded.
struct BehaviorState {
    Side believed_heading = Side::E;
    int hops = 0;
    friend bool operator==(const BehaviorState&, const BehaviorState&) = default;
};

/// Geometry persisted into commands.
struct MotionProfile {
    Kinematics kinematics;
    double pitch_mm = 75.0;
};

struct Decision {
    std::vector<MotionCommand> commands;  // empty => stay put
    std::optional<RelSide> chosen;
    std::optional<Side> world_target;     // believed world direction of travel
    BehaviorState next;

    bool idle() const noexcept { return commands.empty(); }
};

/// Opposing-duty turn along the shortest arc; zero-length turn for dtheta == 0.
MotionCommand plan_rotation(double current_theta, double target_theta, const Kinematics& kin);
/// Straight drive of `distance_mm` at the profile's drive duty.
MotionCommand plan_drive(double distance_mm, const Kinematics& kin);

/// Rotate to face `target` (relative to the believed heading), then one pitch.
Decision hop_toward(RelSide target, const BehaviorState& state, const MotionProfile& profile);

Decision gradient_hop_decide(const SensorFrame& frame, const BehaviorState& state,
                             const BehaviorParams& params, const MotionProfile& profile);
Decision random_walk_avoid_decide(const SensorFrame& frame, const BehaviorState& state, Rng& rng,
                                  const BehaviorParams& params, const MotionProfile& profile);
Decision transport_decide(const SensorFrame& frame, const BehaviorState& state,
                          const BehaviorParams& params, const MotionProfile& profile);
Decision flee_light_decide(const SensorFrame& frame, const BehaviorState& state,
                           const BehaviorParams& params, const MotionProfile& profile);

Decision decide(const BehaviorSpec& spec, const SensorFrame& frame, const BehaviorState& state,
                Rng& rng, const MotionProfile& profile);

enum class Phase : std::uint8_t { Rotate, Drive, Settle };

struct HopPlan {
    Phase phase = Phase::Settle;
    std::optional<Side> target_side;
    double remaining_ms = 0.0;  // settle time left (Settle phase only)
};

struct ControllerEvent {
    enum class Kind : std::uint8_t { None, HopStarted, HopFinished } kind = Kind::None;
    std::optional<Side> target;
};

/// Executes a behavior on one robot: feeds queued commands to the motors and
/// calls the decision function once per settle.
class Controller {
public:
    Controller(BehaviorSpec spec, BehaviorState initial, MotionProfile profile);

    /// Call once per tick before World::advance.
    ControllerEvent update(World& world, Robot& robot, Rng& rng);

    const BehaviorSpec& spec() const noexcept { return spec_; }
    const BehaviorState& state() const noexcept { return state_; }
    const HopPlan& plan() const noexcept { return plan_; }
    bool settled() const noexcept { return plan_.phase == Phase::Settle; }

private:
    BehaviorSpec spec_;
    BehaviorState state_;
    MotionProfile profile_;
    HopPlan plan_;
    std::deque<MotionCommand> queue_;
};

}  // namespace gengrid::behaviors
