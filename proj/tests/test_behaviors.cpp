#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "gengrid/behaviors.hpp"

using namespace gengrid;
using namespace gengrid::behaviors;
using std::numbers::pi;

namespace {

SensorFrame frame_of(int center, int front, int back, int left, int right) {
    SensorFrame f;
    f[SensorSlot::Center] = Intensity(center);
    f[SensorSlot::Front] = Intensity(front);
    f[SensorSlot::Back] = Intensity(back);
    f[SensorSlot::Left] = Intensity(left);
    f[SensorSlot::Right] = Intensity(right);
    return f;
}

SensorFrame random_frame(Rng& rng, int levels) {
    SensorFrame f;
    for (auto& v : f.values) v = Intensity(static_cast<int>(rng.below(static_cast<std::uint64_t>(levels))) * 10);
    return f;
}

// Reference argmax: strictly positive gradient, first of Front, Right, Back, Left on ties.
std::optional<RelSide> oracle_gradient(const SensorFrame& f) {
    const int here = f[SensorSlot::Center].value();
    int best = here;
    for (RelSide s : {RelSide::Front, RelSide::Right, RelSide::Back, RelSide::Left}) {
        best = std::max(best, f[slot_of(s)].value());
    }
    if (best == here) return std::nullopt;
    for (RelSide s : {RelSide::Front, RelSide::Right, RelSide::Back, RelSide::Left}) {
        if (f[slot_of(s)].value() == best) return s;
    }
    return std::nullopt;
}

const MotionProfile kProfile{};

}  // namespace

TEST_CASE("relative and world sides are inverse") {
    for (Side h : kSides) {
        for (RelSide r : kPriority) CHECK(relative(resolve(r, h), h) == r);
        CHECK(resolve(RelSide::Front, h) == h);
        CHECK(resolve(RelSide::Back, h) == opposite(h));
    }
    CHECK(resolve(RelSide::Right, Side::N) == Side::E);
    CHECK(resolve(RelSide::Left, Side::N) == Side::W);
    CHECK(resolve(RelSide::Right, Side::E) == Side::S);
}

TEST_CASE("nearest_side snaps to the closest cardinal heading") {
    CHECK(nearest_side(0.1) == Side::E);
    CHECK(nearest_side(pi / 2 - 0.3) == Side::N);
    CHECK(nearest_side(-pi / 2 + 0.2) == Side::S);
    CHECK(nearest_side(pi - 0.1) == Side::W);
    CHECK(nearest_side(-pi + 0.1) == Side::W);
    for (Side s : kSides) CHECK(nearest_side(side_heading(s)) == s);
}

TEST_CASE("gradient hop matches the reference argmax on random frames") {
    Rng rng(21);
    for (int i = 0; i < 5000; ++i) {
        const auto f = random_frame(rng, 1 + static_cast<int>(rng.below(6)));
        const Side heading = kSides[rng.below(4)];
        const auto d = gradient_hop_decide(f, {heading, 0}, {}, kProfile);
        const auto expect = oracle_gradient(f);
        REQUIRE(d.chosen == expect);
        if (expect) {
            CHECK(d.world_target == resolve(*expect, heading));
            CHECK(d.next.believed_heading == resolve(*expect, heading));
            CHECK(d.next.hops == 1);
        } else {
            CHECK(d.idle());
        }
    }
}

TEST_CASE("gradient hop tie-break and local maximum") {
    CHECK(gradient_hop_decide(frame_of(10, 50, 50, 50, 50), {}, {}, kProfile).chosen == RelSide::Front);
    CHECK(gradient_hop_decide(frame_of(10, 20, 50, 50, 50), {}, {}, kProfile).chosen == RelSide::Right);
    CHECK(gradient_hop_decide(frame_of(10, 20, 50, 50, 20), {}, {}, kProfile).chosen == RelSide::Back);
    CHECK(gradient_hop_decide(frame_of(100, 20, 50, 50, 20), {}, {}, kProfile).idle());
    CHECK(gradient_hop_decide(frame_of(50, 50, 50, 50, 50), {}, {}, kProfile).idle());
}

TEST_CASE("hop plans a rotation only when the target is not ahead") {
    const auto ahead = hop_toward(RelSide::Front, {Side::N, 0}, kProfile);
    REQUIRE(ahead.commands.size() == 1);
    CHECK(ahead.commands[0].is_straight());
    CHECK(ahead.commands[0].duration_ms == doctest::Approx(1000.0));

    const auto right = hop_toward(RelSide::Right, {Side::N, 0}, kProfile);
    REQUIRE(right.commands.size() == 2);
    CHECK(right.commands[0].is_rotation());
    CHECK(right.commands[0].left_duty > 0.0);
    CHECK(right.commands[0].duration_ms == doctest::Approx(kProfile.kinematics.t_rot90_ms()));
    CHECK(right.next.believed_heading == Side::E);

    const auto back = hop_toward(RelSide::Back, {Side::E, 2}, kProfile);
    CHECK(back.commands[0].duration_ms == doctest::Approx(2 * kProfile.kinematics.t_rot90_ms()));
    CHECK(back.next.hops == 3);
}

TEST_CASE("random walk never picks a wall side and picks open sides evenly") {
    const auto f = frame_of(0, 100, 30, 100, 0);
    Rng rng(4);
    std::array<int, 4> counts{};
    const int n = 8000;
    for (int i = 0; i < n; ++i) {
        const auto d = random_walk_avoid_decide(f, {}, rng, {}, kProfile);
        REQUIRE(d.chosen);
        ++counts[static_cast<std::size_t>(*d.chosen)];
    }
    CHECK(counts[static_cast<std::size_t>(RelSide::Front)] == 0);
    CHECK(counts[static_cast<std::size_t>(RelSide::Left)] == 0);
    CHECK(std::abs(counts[static_cast<std::size_t>(RelSide::Back)] - n / 2) < 250);
    Rng r2(4);
    CHECK(random_walk_avoid_decide(frame_of(0, 100, 100, 100, 100), {}, r2, {}, kProfile).idle());
}

TEST_CASE("random walk is reproducible from its rng") {
    Rng a(77), b(77);
    for (int i = 0; i < 100; ++i) {
        const auto f = random_frame(a, 11);
        (void)random_frame(b, 11);
        CHECK(random_walk_avoid_decide(f, {}, a, {}, kProfile).chosen ==
              random_walk_avoid_decide(f, {}, b, {}, kProfile).chosen);
    }
}

TEST_CASE("transport follower advances along the axis next to a lit object") {
    BehaviorParams p;
    p.transport_axis = Side::E;
    // Facing east: the object ahead.
    auto d = transport_decide(frame_of(0, 100, 0, 0, 0), {Side::E, 0}, p, kProfile);
    CHECK(d.world_target == Side::E);
    // Object behind still pushes the follower east.
    d = transport_decide(frame_of(0, 0, 100, 0, 0), {Side::E, 0}, p, kProfile);
    CHECK(d.world_target == Side::E);
    // Facing north the axis is to the right.
    d = transport_decide(frame_of(0, 0, 0, 0, 100), {Side::N, 0}, p, kProfile);
    CHECK(d.chosen == RelSide::Right);
    CHECK(transport_decide(frame_of(0, 0, 0, 100, 0), {Side::E, 0}, p, kProfile).idle());
    CHECK(transport_decide(frame_of(0, 50, 0, 0, 0), {Side::E, 0}, p, kProfile).idle());
}

TEST_CASE("flee light moves to the darkest side when something is lit") {
    BehaviorParams p;
    auto d = flee_light_decide(frame_of(0, 100, 0, 20, 10), {Side::E, 0}, p, kProfile);
    CHECK(d.chosen == RelSide::Back);
    d = flee_light_decide(frame_of(0, 100, 0, 0, 0), {Side::E, 0}, p, kProfile);
    CHECK(d.chosen == RelSide::Right);
    CHECK(flee_light_decide(frame_of(100, 50, 10, 20, 0), {}, p, kProfile).idle());
}

TEST_CASE("hop budget") {
    BehaviorParams p;
    p.max_hops = 2;
    const auto f = frame_of(0, 80, 0, 0, 0);
    CHECK(!gradient_hop_decide(f, {Side::E, 1}, p, kProfile).idle());
    CHECK(gradient_hop_decide(f, {Side::E, 2}, p, kProfile).idle());
    Rng rng(1);
    CHECK(random_walk_avoid_decide(frame_of(0, 0, 0, 0, 0), {Side::E, 2}, rng, p, kProfile).idle());
}

TEST_CASE("decide dispatch and idle behavior") {
    Rng rng(1);
    const auto f = frame_of(0, 80, 0, 0, 100);
    CHECK(decide({BehaviorKind::Idle, {}}, f, {}, rng, kProfile).idle());
    CHECK(decide({BehaviorKind::GradientHop, {}}, f, {}, rng, kProfile).chosen == RelSide::Right);
    CHECK(behavior_kind_from_string("FleeLight") == BehaviorKind::FleeLight);
    CHECK_THROWS_AS(behavior_kind_from_string("Dance"), ValidationError);
}

TEST_CASE("controller executes one full hop in the world") {
    WorldConfig cfg;
    World w(cfg, Grid(5, 5, CellProgram::of(ProgramKind::StaticIntensity)));
    w.grid().set_center_intensity({2, 1}, 60);
    w.add_robot(make_robot(0, {187.5, 187.5, pi / 2}, 75.0));
    BehaviorSpec spec{BehaviorKind::GradientHop, {}};
    spec.params.max_hops = 1;
    Controller ctl(spec, {Side::N, 0}, {cfg.kinematics, cfg.cell_pitch_mm});
    Rng rng(1);
    int started = 0, finished = 0;
    std::uint64_t start_tick = 0, end_tick = 0;
    for (int t = 0; t < 400; ++t) {
        auto& r = w.robots()[0];
        const auto ev = ctl.update(w, r, rng);
        if (ev.kind == ControllerEvent::Kind::HopStarted) {
            ++started;
            start_tick = w.tick();
            CHECK(ev.target == Side::W);
        }
        if (ev.kind == ControllerEvent::Kind::HopFinished) {
            ++finished;
            end_tick = w.tick();
        }
        w.advance(rng);
    }
    CHECK(started == 1);
    CHECK(finished == 1);
    const auto& p = w.robots()[0].pose;
    CHECK(w.cell_at({p.x, p.y}) == CellId{2, 1});
    CHECK(p.x == doctest::Approx(112.5));
    CHECK(p.y == doctest::Approx(187.5));
    CHECK(ctl.state().believed_heading == Side::W);
    // 90 degree turn (105 ticks, last one partial) plus a 100-tick drive.
    CHECK(end_tick - start_tick == 205);
    CHECK(ctl.settled());
}
