#include "gengrid/behaviors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace gengrid::behaviors {

std::string_view to_string(BehaviorKind k) noexcept {
    switch (k) {
        case BehaviorKind::GradientHop: return "GradientHop";
        case BehaviorKind::RandomWalkAvoid: return "RandomWalkAvoid";
        case BehaviorKind::TransportFollower: return "TransportFollower";
        case BehaviorKind::FleeLight: return "FleeLight";
        case BehaviorKind::Idle: return "Idle";
    }
    return "?";
}

BehaviorKind behavior_kind_from_string(std::string_view text) {
    for (auto k : {BehaviorKind::GradientHop, BehaviorKind::RandomWalkAvoid,
                   BehaviorKind::TransportFollower, BehaviorKind::FleeLight, BehaviorKind::Idle}) {
        if (to_string(k) == text) return k;
    }
    throw ValidationError("unknown behavior '" + std::string(text) + "'");
}

SensorSlot slot_of(RelSide s) noexcept {
    switch (s) {
        case RelSide::Front: return SensorSlot::Front;
        case RelSide::Right: return SensorSlot::Right;
        case RelSide::Back: return SensorSlot::Back;
        case RelSide::Left: return SensorSlot::Left;
    }
    return SensorSlot::Center;
}

// Side and RelSide are both enumerated clockwise.
Side resolve(RelSide s, Side heading) noexcept {
    return static_cast<Side>((static_cast<int>(heading) + static_cast<int>(s)) % 4);
}

RelSide relative(Side world, Side heading) noexcept {
    return static_cast<RelSide>((static_cast<int>(world) - static_cast<int>(heading) + 4) % 4);
}

Side nearest_side(double theta) noexcept {
    const double t = normalize_angle(theta);
    const double quarter = std::numbers::pi / 2.0;
    const long k = std::lround(t / quarter);  // -2..2, counter-clockwise quarters from east
    switch (((k % 4) + 4) % 4) {
        case 0: return Side::E;
        case 1: return Side::N;
        case 2: return Side::W;
        default: return Side::S;
    }
}

MotionCommand plan_rotation(double current_theta, double target_theta, const Kinematics& kin) {
    const double delta = normalize_angle(target_theta - current_theta);
    if (delta == 0.0) return {0.0, 0.0, 0.0};
    const double duty = kin.rotate_duty;
    const double duration = std::abs(delta) / kin.rotation_rate_rad_s() * 1000.0;
    // Right wheel forward turns counter-clockwise (positive theta).
    return delta > 0.0 ? MotionCommand{-duty, duty, duration} : MotionCommand{duty, -duty, duration};
}

MotionCommand plan_drive(double distance_mm, const Kinematics& kin) {
    return {kin.drive_duty, kin.drive_duty, distance_mm / kin.drive_speed_mm_s() * 1000.0};
}

Decision hop_toward(RelSide target, const BehaviorState& state, const MotionProfile& profile) {
    Decision d;
    const Side world = resolve(target, state.believed_heading);
    const MotionCommand turn =
        plan_rotation(side_heading(state.believed_heading), side_heading(world), profile.kinematics);
    if (turn.duration_ms > 0.0) d.commands.push_back(turn);
    d.commands.push_back(plan_drive(profile.pitch_mm, profile.kinematics));
    d.chosen = target;
    d.world_target = world;
    d.next = state;
    d.next.believed_heading = world;
    d.next.hops = state.hops + 1;
    return d;
}

namespace {

Decision stay(const BehaviorState& state) {
    Decision d;
    d.next = state;
    return d;
}

bool hop_budget_spent(const BehaviorState& state, const BehaviorParams& params) {
    return params.max_hops > 0 && state.hops >= params.max_hops;
}

}  // namespace

Decision gradient_hop_decide(const SensorFrame& frame, const BehaviorState& state,
                             const BehaviorParams& params, const MotionProfile& profile) {
    if (hop_budget_spent(state, params)) return stay(state);
    const int here = frame[SensorSlot::Center].value();
    std::optional<RelSide> best;
    int best_gradient = 0;
    for (RelSide s : kPriority) {
        const int g = frame[slot_of(s)].value() - here;
        if (g > best_gradient) {
            best_gradient = g;
            best = s;
        }
    }
    if (!best) return stay(state);
    return hop_toward(*best, state, profile);
}

Decision random_walk_avoid_decide(const SensorFrame& frame, const BehaviorState& state, Rng& rng,
                                  const BehaviorParams& params, const MotionProfile& profile) {
    if (hop_budget_spent(state, params)) return stay(state);
    std::array<RelSide, 4> open{};
    std::size_t n = 0;
    for (RelSide s : kPriority) {
        if (frame[slot_of(s)].value() < params.wall_threshold) open[n++] = s;
    }
    if (n == 0) return stay(state);
    return hop_toward(open[rng.below(n)], state, profile);
}

Decision transport_decide(const SensorFrame& frame, const BehaviorState& state,
                          const BehaviorParams& params, const MotionProfile& profile) {
    if (hop_budget_spent(state, params)) return stay(state);
    const RelSide ahead = relative(params.transport_axis, state.believed_heading);
    const RelSide behind = relative(opposite(params.transport_axis), state.believed_heading);
    const bool object_adjacent = frame[slot_of(ahead)].value() > params.object_threshold ||
                                 frame[slot_of(behind)].value() > params.object_threshold;
    if (!object_adjacent) return stay(state);
    return hop_toward(ahead, state, profile);
}

Decision flee_light_decide(const SensorFrame& frame, const BehaviorState& state,
                           const BehaviorParams& params, const MotionProfile& profile) {
    if (hop_budget_spent(state, params)) return stay(state);
    bool lit = false;
    std::optional<RelSide> darkest;
    int darkest_value = 0;
    for (RelSide s : kPriority) {
        const int v = frame[slot_of(s)].value();
        if (v > params.flee_threshold) lit = true;
        if (!darkest || v < darkest_value) {
            darkest = s;
            darkest_value = v;
        }
    }
    if (!lit) return stay(state);
    return hop_toward(*darkest, state, profile);
}

Decision decide(const BehaviorSpec& spec, const SensorFrame& frame, const BehaviorState& state,
                Rng& rng, const MotionProfile& profile) {
    switch (spec.kind) {
        case BehaviorKind::GradientHop: return gradient_hop_decide(frame, state, spec.params, profile);
        case BehaviorKind::RandomWalkAvoid:
            return random_walk_avoid_decide(frame, state, rng, spec.params, profile);
        case BehaviorKind::TransportFollower: return transport_decide(frame, state, spec.params, profile);
        case BehaviorKind::FleeLight: return flee_light_decide(frame, state, spec.params, profile);
        case BehaviorKind::Idle: return stay(state);
    }
    return stay(state);
}

Controller::Controller(BehaviorSpec spec, BehaviorState initial, MotionProfile profile)
    : spec_(spec), state_(initial), profile_(profile) {
    plan_.phase = Phase::Settle;
    plan_.remaining_ms = spec_.params.settle_ms;
}

ControllerEvent Controller::update(World& world, Robot& robot, Rng& rng) {
    if (!robot.present || robot.motor_cmd) return {};

    if (!queue_.empty()) {
        const MotionCommand next = queue_.front();
        queue_.pop_front();
        world.command(robot.id, next);
        plan_.phase = next.is_rotation() ? Phase::Rotate : Phase::Drive;
        return {};
    }

    if (plan_.phase != Phase::Settle) {
        plan_.phase = Phase::Settle;
        plan_.remaining_ms = spec_.params.settle_ms;
        return {ControllerEvent::Kind::HopFinished, plan_.target_side};
    }

    plan_.remaining_ms -= world.config().tick_ms;
    if (plan_.remaining_ms > 1e-9) return {};

    const Decision d = decide(spec_, world.robot_readings(robot), state_, rng, profile_);
    state_ = d.next;
    if (d.idle()) {
        plan_.remaining_ms = spec_.params.settle_ms;
        return {};
    }
    queue_.assign(d.commands.begin(), d.commands.end());
    plan_.target_side = d.world_target;
    const MotionCommand first = queue_.front();
    queue_.pop_front();
    world.command(robot.id, first);
    plan_.phase = first.is_rotation() ? Phase::Rotate : Phase::Drive;
    return {ControllerEvent::Kind::HopStarted, d.world_target};
}

}  // namespace gengrid::behaviors
