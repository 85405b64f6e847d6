#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "builtin_data.hpp"
#include "gengrid/scenario.hpp"

namespace gengrid::scenarios {

namespace {

using nlohmann::json;

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

/// Walks the document, collecting every problem instead of stopping at the first.
class Checker {
public:
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    bool object(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, v] : j.items()) {
            if (!allowed.contains(k)) fail(path + "." + k, "unknown field");
        }
        return true;
    }

    const json* field(const json& j, const char* key, const std::string& path, bool required) {
        auto it = j.find(key);
        if (it == j.end()) {
            if (required) fail(path + "." + key, "missing required field");
            return nullptr;
        }
        return &*it;
    }

    double number(const json& j, const char* key, const std::string& path, double fallback,
                  bool required = false) {
        const json* v = field(j, key, path, required);
        if (!v) return fallback;
        if (!v->is_number()) {
            fail(path + "." + key, "expected a number");
            return fallback;
        }
        return v->get<double>();
    }

    long long integer(const json& j, const char* key, const std::string& path, long long fallback,
                      bool required = false) {
        const json* v = field(j, key, path, required);
        if (!v) return fallback;
        if (!v->is_number_integer()) {
            fail(path + "." + key, "expected an integer");
            return fallback;
        }
        return v->get<long long>();
    }

    std::string text(const json& j, const char* key, const std::string& path,
                     const std::string& fallback, bool required = false) {
        const json* v = field(j, key, path, required);
        if (!v) return fallback;
        if (!v->is_string()) {
            fail(path + "." + key, "expected a string");
            return fallback;
        }
        return v->get<std::string>();
    }

    std::map<std::string, double> numbers(const json& j, const std::string& path) {
        std::map<std::string, double> out;
        if (!j.is_object()) {
            fail(path, "expected an object of numbers");
            return out;
        }
        for (const auto& [k, v] : j.items()) {
            if (!v.is_number()) {
                fail(path + "." + k, "expected a number");
                continue;
            }
            out[k] = v.get<double>();
        }
        return out;
    }

    std::optional<CellId> cell(const json& j, const std::string& path) {
        if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
            fail(path, "expected [row, col]");
            return std::nullopt;
        }
        return CellId{j[0].get<int>(), j[1].get<int>()};
    }
};

double heading_value(Checker& ck, const json& j, const std::string& path) {
    if (j.is_string()) {
        try {
            return side_heading(side_from_string(j.get<std::string>()));
        } catch (const ValidationError& e) {
            ck.fail(path, e.what());
            return 0.0;
        }
    }
    if (j.is_number()) return j.get<double>();
    ck.fail(path, "heading must be N/E/S/W or radians");
    return 0.0;
}

CellProgram read_program(Checker& ck, const json& j, const std::string& path) {
    CellProgram p;
    if (!ck.object(j, path, {"cell", "kind", "params"})) return p;
    const std::string kind = ck.text(j, "kind", path, "Inert", true);
    try {
        p.kind = program_kind_from_string(kind);
    } catch (const ValidationError& e) {
        ck.fail(path + ".kind", e.what());
    }
    if (const json* params = ck.field(j, "params", path, false)) {
        p.params = ck.numbers(*params, path + ".params");
    }
    try {
        validate_program(p);
    } catch (const ValidationError& e) {
        ck.fail(path, e.what());
    }
    return p;
}

MagnetSpec read_magnet_spec(Checker& ck, const json& j, const std::string& path) {
    MagnetSpec m;
    if (!ck.object(j, path, {"diameter_mm", "strength", "detect_radius_mm"})) return m;
    m.diameter_mm = ck.number(j, "diameter_mm", path, m.diameter_mm);
    m.strength = ck.number(j, "strength", path, m.strength);
    m.detect_radius_mm = ck.number(j, "detect_radius_mm", path, m.detect_radius_mm);
    try {
        m.validate();
    } catch (const ValidationError& e) {
        ck.fail(path, e.what());
    }
    return m;
}

behaviors::BehaviorSpec read_behavior(Checker& ck, const json& j, const std::string& path) {
    behaviors::BehaviorSpec b;
    if (!ck.object(j, path, {"kind", "params"})) return b;
    try {
        b.kind = behaviors::behavior_kind_from_string(ck.text(j, "kind", path, "Idle", true));
    } catch (const ValidationError& e) {
        ck.fail(path + ".kind", e.what());
    }
    const json* params = ck.field(j, "params", path, false);
    if (!params) return b;
    const std::string pp = path + ".params";
    if (!ck.object(*params, pp, {"wall_threshold", "flee_threshold", "object_threshold",
                                 "settle_ms", "max_hops", "transport_axis"})) {
        return b;
    }
    auto& p = b.params;
    p.wall_threshold = static_cast<int>(ck.integer(*params, "wall_threshold", pp, p.wall_threshold));
    p.flee_threshold = static_cast<int>(ck.integer(*params, "flee_threshold", pp, p.flee_threshold));
    p.object_threshold =
        static_cast<int>(ck.integer(*params, "object_threshold", pp, p.object_threshold));
    p.settle_ms = ck.number(*params, "settle_ms", pp, p.settle_ms);
    p.max_hops = static_cast<int>(ck.integer(*params, "max_hops", pp, p.max_hops));
    if (params->contains("transport_axis")) {
        try {
            p.transport_axis = side_from_string(ck.text(*params, "transport_axis", pp, "E"));
        } catch (const ValidationError& e) {
            ck.fail(pp + ".transport_axis", e.what());
        }
    }
    for (int v : {p.wall_threshold, p.flee_threshold, p.object_threshold}) {
        if (v < 0 || v > 100) ck.fail(pp, "thresholds must be in [0, 100]");
    }
    if (p.settle_ms < 0.0) ck.fail(pp + ".settle_ms", "must be >= 0");
    if (p.max_hops < 0) ck.fail(pp + ".max_hops", "must be >= 0");
    return b;
}

void read_world(Checker& ck, const json& j, ScenarioSpec& spec) {
    const std::string path = "world";
    if (!ck.object(j, path, {"rows", "cols", "cell_pitch_mm", "tick_ms", "noise", "kinematics",
                             "light_bleed"})) {
        return;
    }
    auto& w = spec.world;
    w.rows = static_cast<int>(ck.integer(j, "rows", path, 5, true));
    w.cols = static_cast<int>(ck.integer(j, "cols", path, 5, true));
    w.cell_pitch_mm = ck.number(j, "cell_pitch_mm", path, w.cell_pitch_mm);
    w.tick_ms = ck.number(j, "tick_ms", path, w.tick_ms);
    w.light_bleed = ck.number(j, "light_bleed", path, w.light_bleed);
    if (const json* noise = ck.field(j, "noise", path, false)) {
        if (noise->is_string()) {
            const auto mode = noise->get<std::string>();
            if (mode == "calibrated") {
                w.noise = calibrated_noise().noise;
                spec.calibrated_noise = true;
            } else if (mode == "none") {
                w.noise = {};
            } else {
                ck.fail(path + ".noise", "expected \"calibrated\", \"none\" or an object");
            }
        } else if (ck.object(*noise, path + ".noise", {"sigma_rot", "sigma_drive", "duty_mismatch"})) {
            w.noise.sigma_rot = ck.number(*noise, "sigma_rot", path + ".noise", 0.0);
            w.noise.sigma_drive = ck.number(*noise, "sigma_drive", path + ".noise", 0.0);
            w.noise.duty_mismatch = ck.number(*noise, "duty_mismatch", path + ".noise", 0.0);
        }
    }
    if (const json* kin = ck.field(j, "kinematics", path, false)) {
        const std::string kp = path + ".kinematics";
        if (ck.object(*kin, kp, {"wheel_base_mm", "v_max_mm_s", "drive_duty", "rotate_duty"})) {
            auto& k = w.kinematics;
            k.wheel_base_mm = ck.number(*kin, "wheel_base_mm", kp, k.wheel_base_mm);
            k.v_max_mm_s = ck.number(*kin, "v_max_mm_s", kp, k.v_max_mm_s);
            k.drive_duty = ck.number(*kin, "drive_duty", kp, k.drive_duty);
            k.rotate_duty = ck.number(*kin, "rotate_duty", kp, k.rotate_duty);
        }
    }
    try {
        w.validate();
    } catch (const ValidationError& e) {
        ck.fail(path, e.what());
    }
}

void read_cells(Checker& ck, const json& j, ScenarioSpec& spec) {
    const std::string path = "cells";
    if (!ck.object(j, path, {"default_program", "intensities", "programs"})) return;
    if (const json* dp = ck.field(j, "default_program", path, false)) {
        spec.default_program = read_program(ck, *dp, path + ".default_program");
    }
    if (const json* in = ck.field(j, "intensities", path, false)) {
        const std::string ip = path + ".intensities";
        if (!in->is_array() || static_cast<int>(in->size()) != spec.world.rows) {
            ck.fail(ip, "expected " + std::to_string(spec.world.rows) + " rows");
        } else {
            for (std::size_t r = 0; r < in->size(); ++r) {
                const json& row = (*in)[r];
                const std::string rp = ip + "[" + std::to_string(r) + "]";
                if (!row.is_array() || static_cast<int>(row.size()) != spec.world.cols) {
                    ck.fail(rp, "expected " + std::to_string(spec.world.cols) + " values");
                    continue;
                }
                std::vector<int> values;
                for (const auto& v : row) {
                    if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 100) {
                        ck.fail(rp, "intensities must be integers in [0, 100]");
                        values.push_back(0);
                    } else {
                        values.push_back(v.get<int>());
                    }
                }
                spec.intensities.push_back(std::move(values));
            }
        }
    }
    if (const json* progs = ck.field(j, "programs", path, false)) {
        if (!progs->is_array()) {
            ck.fail(path + ".programs", "expected an array");
            return;
        }
        for (std::size_t i = 0; i < progs->size(); ++i) {
            const std::string pp = path + ".programs[" + std::to_string(i) + "]";
            const json& entry = (*progs)[i];
            CellProgram p = read_program(ck, entry, pp);
            const json* cj = entry.is_object() ? ck.field(entry, "cell", pp, true) : nullptr;
            if (!cj) continue;
            if (auto c = ck.cell(*cj, pp + ".cell")) spec.programs.push_back({*c, std::move(p)});
        }
    }
}

Pose read_pose(Checker& ck, const json& j, const std::string& path, const WorldConfig& w) {
    Pose pose;
    if (!ck.object(j, path, {"cell", "heading", "x", "y", "theta"})) return pose;
    if (const json* c = ck.field(j, "cell", path, false)) {
        if (auto id = ck.cell(*c, path + ".cell")) {
            pose.x = (id->col + 0.5) * w.cell_pitch_mm;
            pose.y = (id->row + 0.5) * w.cell_pitch_mm;
        }
        if (j.contains("x") || j.contains("y")) ck.fail(path, "give either cell or x/y");
    } else {
        pose.x = ck.number(j, "x", path, 0.0, true);
        pose.y = ck.number(j, "y", path, 0.0, true);
    }
    if (const json* h = ck.field(j, "heading", path, false)) pose.theta = heading_value(ck, *h, path + ".heading");
    if (const json* t = ck.field(j, "theta", path, false)) pose.theta = heading_value(ck, *t, path + ".theta");
    pose.theta = normalize_angle(pose.theta);
    return pose;
}

void read_robots(Checker& ck, const json& j, ScenarioSpec& spec) {
    if (!j.is_array()) {
        ck.fail("robots", "expected an array");
        return;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = "robots[" + std::to_string(i) + "]";
        const json& rj = j[i];
        if (!ck.object(rj, path, {"name", "start", "behavior", "magnet", "lift_at_tick"})) continue;
        RobotSpec r;
        r.name = ck.text(rj, "name", path, "robot" + std::to_string(i));
        if (const json* st = ck.field(rj, "start", path, true)) {
            if (st->is_array()) {
                for (std::size_t k = 0; k < st->size(); ++k) {
                    r.starts.push_back(read_pose(ck, (*st)[k], path + ".start[" + std::to_string(k) + "]",
                                                 spec.world));
                }
            } else {
                r.starts.push_back(read_pose(ck, *st, path + ".start", spec.world));
            }
            if (r.starts.empty()) ck.fail(path + ".start", "needs at least one pose");
        }
        if (const json* b = ck.field(rj, "behavior", path, true)) r.behavior = read_behavior(ck, *b, path + ".behavior");
        if (const json* m = ck.field(rj, "magnet", path, false)) r.magnet = read_magnet_spec(ck, *m, path + ".magnet");
        if (rj.contains("lift_at_tick")) {
            const long long t = ck.integer(rj, "lift_at_tick", path, 0);
            if (t < 0) ck.fail(path + ".lift_at_tick", "must be >= 0");
            r.lift_at_tick = static_cast<std::uint64_t>(std::max(0LL, t));
        }
        spec.robots.push_back(std::move(r));
    }
}

void read_magnet(Checker& ck, const json& j, ScenarioSpec& spec) {
    auto& m = spec.magnet;
    if (j.is_null()) return;
    if (j.is_string()) {
        if (j.get<std::string>() == "interactive") {
            m.mode = MagnetScript::Mode::Interactive;
        } else if (j.get<std::string>() != "none") {
            ck.fail("magnet", "expected \"interactive\", \"none\" or a script object");
        }
        return;
    }
    if (!ck.object(j, "magnet", {"waypoints", "remove_at_tick", "spec", "interactive"})) return;
    m.mode = MagnetScript::Mode::Scripted;
    if (const json* it = ck.field(j, "interactive", "magnet", false)) {
        if (!it->is_boolean()) ck.fail("magnet.interactive", "expected a boolean");
        else if (it->get<bool>()) m.mode = MagnetScript::Mode::Interactive;
    }
    if (const json* s = ck.field(j, "spec", "magnet", false)) m.spec = read_magnet_spec(ck, *s, "magnet.spec");
    if (j.contains("remove_at_tick")) {
        m.remove_at_tick = static_cast<std::uint64_t>(std::max(0LL, ck.integer(j, "remove_at_tick", "magnet", 0)));
    }
    const json* wps = ck.field(j, "waypoints", "magnet", m.mode == MagnetScript::Mode::Scripted);
    if (!wps) return;
    if (!wps->is_array()) {
        ck.fail("magnet.waypoints", "expected an array");
        return;
    }
    for (std::size_t i = 0; i < wps->size(); ++i) {
        const std::string path = "magnet.waypoints[" + std::to_string(i) + "]";
        const json& w = (*wps)[i];
        if (!ck.object(w, path, {"tick", "cell", "x", "y"})) continue;
        MagnetWaypoint wp;
        const long long t = ck.integer(w, "tick", path, 0, true);
        if (t < 0) ck.fail(path + ".tick", "must be >= 0");
        wp.tick = static_cast<std::uint64_t>(std::max(0LL, t));
        if (const json* c = ck.field(w, "cell", path, false)) {
            if (auto id = ck.cell(*c, path + ".cell")) {
                wp.position = {(id->col + 0.5) * spec.world.cell_pitch_mm,
                               (id->row + 0.5) * spec.world.cell_pitch_mm};
            }
        } else {
            wp.position = {ck.number(w, "x", path, 0.0, true), ck.number(w, "y", path, 0.0, true)};
        }
        if (!m.waypoints.empty() && wp.tick <= m.waypoints.back().tick) {
            ck.fail(path + ".tick", "waypoint ticks must be strictly increasing");
        }
        m.waypoints.push_back(wp);
    }
}

void check_semantics(Checker& ck, ScenarioSpec& spec) {
    const int rows = spec.world.rows;
    const int cols = spec.world.cols;
    auto in_grid = [&](CellId c) { return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols; };
    for (const auto& p : spec.programs) {
        if (!in_grid(p.cell)) ck.fail("cells.programs", "cell " + to_string(p.cell) + " out of range");
    }
    for (std::size_t i = 0; i < spec.robots.size(); ++i) {
        for (const auto& pose : spec.robots[i].starts) {
            if (pose.x < 0 || pose.y < 0 || pose.x >= spec.world.extent_x() ||
                pose.y >= spec.world.extent_y()) {
                ck.fail("robots[" + std::to_string(i) + "].start", "pose outside the grid");
            }
        }
    }
    if (spec.duration_ticks == 0) ck.fail("duration_ticks", "must be > 0");
    if (spec.trials < 1) ck.fail("trials", "must be >= 1");
    if (std::find(std::begin(kPredicates), std::end(kPredicates), spec.success.predicate) ==
        std::end(kPredicates)) {
        ck.fail("success.predicate", "unknown predicate '" + spec.success.predicate + "'");
    }
    if (spec.magnet.mode == MagnetScript::Mode::Scripted && spec.magnet.waypoints.empty()) {
        ck.fail("magnet.waypoints", "scripted magnet needs at least one waypoint");
    }
}

}  // namespace

std::optional<Vec2> MagnetScript::position_at(std::uint64_t tick) const {
    if (waypoints.empty() || tick < waypoints.front().tick) return std::nullopt;
    if (remove_at_tick && tick >= *remove_at_tick) return std::nullopt;
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        const auto& a = waypoints[i - 1];
        const auto& b = waypoints[i];
        if (tick < b.tick) {
            const double f = static_cast<double>(tick - a.tick) / static_cast<double>(b.tick - a.tick);
            return Vec2{a.position.x + f * (b.position.x - a.position.x),
                        a.position.y + f * (b.position.y - a.position.y)};
        }
    }
    return waypoints.back().position;
}

ScenarioSpec load_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw ParseError("scenario parse error at line " + std::to_string(line) + ", column " +
                             std::to_string(col) + ": " + e.what(),
                         line, col);
    }
    Checker ck;
    ScenarioSpec spec;
    if (!ck.object(doc, "scenario", {"schema", "name", "figure", "description", "world", "cells",
                                     "robots", "magnet", "duration_ticks", "trials", "seed",
                                     "success"})) {
        throw ParseError("scenario: top level must be an object");
    }
    spec.schema = static_cast<int>(ck.integer(doc, "schema", "scenario", 0, true));
    if (doc.contains("schema") && spec.schema != kScenarioSchema) {
        ck.fail("scenario.schema", "unsupported version " + std::to_string(spec.schema));
    }
    spec.name = ck.text(doc, "name", "scenario", "", true);
    spec.figure = ck.text(doc, "figure", "scenario", "");
    spec.description = ck.text(doc, "description", "scenario", "");
    if (const json* w = ck.field(doc, "world", "scenario", true)) read_world(ck, *w, spec);
    if (const json* c = ck.field(doc, "cells", "scenario", false)) read_cells(ck, *c, spec);
    if (const json* r = ck.field(doc, "robots", "scenario", false)) read_robots(ck, *r, spec);
    if (const json* m = ck.field(doc, "magnet", "scenario", false)) read_magnet(ck, *m, spec);
    const long long duration = ck.integer(doc, "duration_ticks", "scenario", 0, true);
    spec.duration_ticks = static_cast<std::uint64_t>(std::max(0LL, duration));
    spec.trials = static_cast<int>(ck.integer(doc, "trials", "scenario", 1));
    spec.seed = static_cast<std::uint64_t>(ck.integer(doc, "seed", "scenario", 0));
    if (const json* s = ck.field(doc, "success", "scenario", true)) {
        if (ck.object(*s, "success", {"predicate", "params"})) {
            spec.success.predicate = ck.text(*s, "predicate", "success", "", true);
            if (const json* p = ck.field(*s, "params", "success", false)) {
                spec.success.params = ck.numbers(*p, "success.params");
            }
        }
    }
    check_semantics(ck, spec);
    if (!ck.errors.empty()) {
        std::string msg = "scenario '" + spec.name + "' has " + std::to_string(ck.errors.size()) +
                          " error(s):";
        for (const auto& e : ck.errors) msg += "\n  " + e;
        throw ParseError(msg);
    }
    return spec;
}

ScenarioSpec load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read scenario '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str());
}

ScenarioSpec find_scenario(const std::string& name_or_path) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(name_or_path, ec)) return load_scenario_file(name_or_path);
    if (const char* env = std::getenv("GENGRID_SCENARIO_PATH")) {
        std::stringstream dirs(env);
        std::string dir;
        while (std::getline(dirs, dir, ':')) {
            if (dir.empty()) continue;
            const auto candidate = std::filesystem::path(dir) / (name_or_path + ".scn");
            if (std::filesystem::is_regular_file(candidate, ec)) return load_scenario_file(candidate);
        }
    }
    return builtin_scenario(name_or_path);
}

std::vector<std::string> builtin_names() {
    return {"sensor_validation", "single_hop", "path2d", "wall_avoid",
            "transport", "shepherding", "pheromone"};
}

std::string_view builtin_source(std::string_view name) {
    for (const auto& doc : detail::builtin_documents()) {
        if (doc.name == name) return doc.text;
    }
    throw LookupError("unknown scenario '" + std::string(name) + "'");
}

ScenarioSpec builtin_scenario(std::string_view name) {
    return load_scenario(std::string(builtin_source(name)));
}

std::vector<ScenarioSpec> builtin_scenarios() {
    std::vector<ScenarioSpec> out;
    for (const auto& n : builtin_names()) out.push_back(builtin_scenario(n));
    return out;
}

CalibratedNoise parse_noise_defaults(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw ParseError(std::string("noise defaults: ") + e.what(), line, col);
    }
    try {
        CalibratedNoise c;
        if (j.at("schema").get<int>() != 1) throw ParseError("noise defaults: unsupported schema");
        c.noise.sigma_rot = j.at("sigma_rot").get<double>();
        c.noise.sigma_drive = j.at("sigma_drive").get<double>();
        c.noise.duty_mismatch = j.value("duty_mismatch", 0.0);
        const auto& a = j.at("achieved");
        c.single_hop_rate = a.at("single_hop").get<double>();
        c.path_rate = a.at("path2d").get<double>();
        c.trials = a.at("trials").get<int>();
        return c;
    } catch (const json::exception& e) {
        throw ParseError(std::string("noise defaults: ") + e.what());
    }
}

std::string noise_defaults_json(const CalibratedNoise& value) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["sigma_rot"] = value.noise.sigma_rot;
    j["sigma_drive"] = value.noise.sigma_drive;
    j["duty_mismatch"] = value.noise.duty_mismatch;
    j["achieved"] = {{"single_hop", value.single_hop_rate},
                     {"path2d", value.path_rate},
                     {"trials", value.trials}};
    return j.dump(2) + "\n";
}

const CalibratedNoise& calibrated_noise() {
    static const CalibratedNoise value = parse_noise_defaults(std::string(detail::noise_defaults_document()));
    return value;
}

}  // namespace gengrid::scenarios
