// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "gengrid/behaviors.hpp"
#include "gengrid/scenario.hpp"
#include "gengrid/telemetry.hpp"

using namespace gengrid;
using namespace gengrid::scenarios;

namespace {

constexpr const char* kGoldenSingleHop42 = "8bb2b668ebca0ee8";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ScenarioSpec noiseless(ScenarioSpec s) {
    s.world.noise = {};
    return s;
}

Outcome single_hop() {
    auto spec = builtin_scenario("single_hop");
    const int per_start = 1000;
    RunOptions o;
    o.trials = per_start * static_cast<int>(spec.start_variants());
    const auto r = run_experiment(spec, o);
    bool ok = true;
    std::string d = fmt("overall %.4f;", r.success_rate);
    for (const auto& [cell, st] : r.per_start) {
        ok &= st.trials == per_start && std::abs(st.rate() - 0.90) <= 0.05;
        d += fmt(" %s %.4f (n=%d)", to_string(cell).c_str(), st.rate(), st.trials);
    }
    return {ok, d + "; band 0.90 +/- 0.05 per start"};
}

Outcome path2d() {
    const auto spec = builtin_scenario("path2d");
    RunOptions o;
    o.trials = 500;
    const auto r = run_experiment(spec, o);
    return {std::abs(r.success_rate - 0.76) <= 0.07,
            fmt("terminus rate %.4f over %zu trials; band 0.76 +/- 0.07", r.success_rate, r.records.size())};
}

Outcome wall_avoid() {
    const auto spec = builtin_scenario("wall_avoid");
    RunOptions o;
    o.trials = 20;
    const auto noisy = run_experiment(spec, o);
    o.noiseless = true;
    const auto clean = run_experiment(spec, o);
    std::uint64_t clean_wall = 0;
    for (const auto& rec : clean.records) clean_wall += rec.wall_ticks;
    const double seconds = static_cast<double>(spec.duration_ticks) * spec.world.tick_ms / 1000.0;
    return {noisy.safe_fraction >= 0.65 && clean_wall == 0,
            fmt("safe fraction %.4f (>= 0.65) over 20 x %.0f s; noiseless corner robot-ticks %llu (== 0)",
                noisy.safe_fraction, seconds, static_cast<unsigned long long>(clean_wall))};
}

Outcome transport() {
    const auto spec = builtin_scenario("transport");
    RunOptions o;
    o.noiseless = true;
    const auto r = run_experiment(spec, o);
    return {r.success_rate == 1.0, fmt("noiseless success %d/%zu (object advanced 4 columns, both robots flanking)",
                                       r.successes, r.records.size())};
}

Outcome pheromone() {
    const auto spec = builtin_scenario("pheromone");
    const auto decay = static_cast<int>(spec.default_program.params.at("decay"));
    const std::uint64_t lift = *spec.robots[0].lift_at_tick;
    const CellId source{2, 2};
    Simulation sim(spec, 0);
    bool lit_ok = true;
    int first_bad = -1;
    for (int k = 1; k <= 8; ++k) {
        sim.step();
        for (const auto& cell : sim.world().grid().cells()) {
            const int d = manhattan(cell.id, source);
            const int expect = (d <= k - 1) ? std::max(0, 100 - decay * d) : 0;
            if (cell.leds.center().value() != expect || (cell.leds.center().value() > 0) != (expect > 0)) {
                lit_ok = false;
                if (first_bad < 0) first_bad = k;
            }
        }
    }
    const auto rec = run_trial(spec, 0);
    const std::uint64_t limit = static_cast<std::uint64_t>((100 + decay - 1) / decay + 8);
    bool decreasing = true;
    std::uint64_t dark_at = 0;
    for (std::uint64_t t = lift + 1; t < rec.brightness.size(); ++t) {
        if (rec.brightness[t - 1] > 0 && rec.brightness[t] >= rec.brightness[t - 1]) decreasing = false;
        if (rec.brightness[t - 1] == 0 && rec.brightness[t] != 0) decreasing = false;
        if (!dark_at && rec.brightness[t] == 0) dark_at = t;
    }
    const bool dark_ok = dark_at && dark_at - lift <= limit;
    return {lit_ok && decreasing && dark_ok,
            fmt("lit sets k<=8 %s; strictly decreasing %s; dark %llu ticks after lift (<= %llu)",
                lit_ok ? "match" : fmt("differ from k=%d", first_bad).c_str(), decreasing ? "yes" : "no",
                static_cast<unsigned long long>(dark_at ? dark_at - lift : 0),
                static_cast<unsigned long long>(limit))};
}

Outcome sensors() {
    const auto spec = builtin_scenario("sensor_validation");
    bool ok = true;
    std::string d;
    for (std::size_t h = 0; h < spec.robots[0].starts.size(); ++h) {
        Simulation sim(spec, static_cast<int>(h));
        sim.step();
        const auto& robot = sim.world().robots()[0];
        const auto start = *sim.world().cell_at({robot.pose.x, robot.pose.y});
        const Side heading = behaviors::nearest_side(robot.pose.theta);
        const auto f = sim.world().robot_readings(robot);
        ok &= f[SensorSlot::Center].value() == spec.center_intensity(start);
        for (behaviors::RelSide rel : behaviors::kPriority) {
            const CellId n = neighbor_of(start, behaviors::resolve(rel, heading));
            ok &= f[behaviors::slot_of(rel)].value() == spec.center_intensity(n);
        }
        ok &= spec.center_intensity(start) == 70;
        ok &= run_trial(spec, static_cast<int>(h)).success;
        d += fmt("%s%s:[%d %d %d %d %d]", h ? " " : "", std::string(to_string(heading)).c_str(),
                 f[SensorSlot::Center].value(), f[SensorSlot::Front].value(), f[SensorSlot::Right].value(),
                 f[SensorSlot::Back].value(), f[SensorSlot::Left].value());
    }
    return {ok, "center/front/right/back/left " + d};
}

Outcome determinism() {
    auto spec = builtin_scenario("single_hop");
    RunOptions o;
    o.seed = 42;
    const auto a = run_experiment(spec, o);
    const auto b = run_experiment(spec, o);
    bool same = a.records.size() == b.records.size();
    for (std::size_t i = 0; same && i < a.records.size(); ++i) {
        same = telemetry::trace_hash(a.records[i]) == telemetry::trace_hash(b.records[i]);
    }
    const auto h = telemetry::trace_hash(a.records.front());
    return {same && h == kGoldenSingleHop42,
            fmt("%zu trial hashes identical across runs: %s; trace[0] %s (golden %s)", a.records.size(),
                same ? "yes" : "no", h.c_str(), kGoldenSingleHop42)};
}

Outcome noiseless_oracle() {
    int runs = 0, ok = 0;
    for (const char* name : {"single_hop", "path2d"}) {
        auto spec = noiseless(builtin_scenario(name));
        const auto starts = spec.robots[0].starts;
        for (const auto& p : starts) {
            for (Side h : kSides) {
                spec.robots[0].starts = {{p.x, p.y, side_heading(h)}};
                ++runs;
                ok += run_trial(spec, 0).success;
            }
        }
    }
    for (const char* name : {"transport", "shepherding"}) {
        RunOptions o;
        o.noiseless = true;
        const auto r = run_experiment(builtin_scenario(name), o);
        runs += static_cast<int>(r.records.size());
        ok += r.successes;
    }
    return {ok == runs, fmt("%d/%d noiseless runs succeed (every start, all four headings)", ok, runs)};
}

Outcome rotation_variance() {
    const double sigma = calibrated_noise().noise.sigma_rot;
    const int n = 1000;
    double s1 = 0.0, s2 = 0.0;
    for (int seed = 0; seed < n; ++seed) {
        WorldConfig cfg;
        cfg.noise = {sigma, 0.0, 0.0};
        World w(cfg, Grid(cfg.rows, cfg.cols));
        w.add_robot(make_robot(0, {187.5, 187.5, 0.0}, cfg.cell_pitch_mm));
        w.command(0, behaviors::plan_rotation(0.0, std::numbers::pi / 2, cfg.kinematics));
        Rng rng(derive_seed(7, static_cast<std::uint64_t>(seed)));
        while (w.robots()[0].motor_cmd) w.advance(rng);
        const double e = normalize_angle(w.robots()[0].pose.theta - std::numbers::pi / 2);
        s1 += e;
        s2 += e * e;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    const double rel = var / (sigma * sigma) - 1.0;
    return {std::abs(rel) <= 0.15, fmt("sample variance %.5f vs sigma_rot^2 %.5f (%+.1f%%, band +/-15%%)", var,
                                       sigma * sigma, 100.0 * rel)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"single-hop reproduction", single_hop},
        {"2D path reproduction", path2d},
        {"wall avoidance", wall_avoid},
        {"collective transport", transport},
        {"pheromone CA", pheromone},
        {"sensor validation", sensors},
        {"determinism", determinism},
        {"noiseless oracle", noiseless_oracle},
        {"rotation noise variance", rotation_variance},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = fn();
        } catch (const std::exception& e) {
            out = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  %-24s %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", name, out.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !out.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
