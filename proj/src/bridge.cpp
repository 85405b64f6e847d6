#include "gengrid/bridge.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gengrid::bridge {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr CommandKind kKinds[] = {
    CommandKind::PlaceMagnet, CommandKind::MoveMagnet, CommandKind::RemoveMagnet,
    CommandKind::Pause,       CommandKind::Resume,     CommandKind::SetSpeed,
    CommandKind::Reset,       CommandKind::LoadScenario,
};

ordered_json id_json(const RequestId& id) {
    if (id.numeric) return ordered_json::parse(id.text);
    return id.text;
}

std::optional<RequestId> read_id(const json& j) {
    auto it = j.find("id");
    if (it == j.end()) return std::nullopt;
    if (it->is_string()) return RequestId{it->get<std::string>(), false};
    if (it->is_number_integer()) return RequestId{it->dump(), true};
    return std::nullopt;
}

Reply error_reply(std::optional<RequestId> id, std::uint64_t tick, std::string message) {
    return {Reply::Type::Err, std::move(id), tick, std::move(message)};
}

bool needs_position(CommandKind k) { return k == CommandKind::PlaceMagnet || k == CommandKind::MoveMagnet; }

ordered_json command_json(const Command& cmd) {
    ordered_json args = ordered_json::object();
    if (needs_position(cmd.kind)) {
        args["x"] = cmd.x;
        args["y"] = cmd.y;
    } else if (cmd.kind == CommandKind::SetSpeed) {
        args["multiplier"] = cmd.speed;
    } else if (cmd.kind == CommandKind::LoadScenario) {
        args["name"] = cmd.scenario;
    }
    ordered_json j;
    j["type"] = "cmd";
    j["id"] = id_json(cmd.id);
    j["kind"] = std::string(to_string(cmd.kind));
    j["args"] = args;
    return j;
}

class Fnv1a {
public:
    void add(std::string_view s) {
        for (unsigned char c : s) {
            h_ ^= c;
            h_ *= 0x100000001b3ULL;
        }
    }
    std::string hex() const {
        static constexpr char digits[] = "0123456789abcdef";
        std::string out(16, '0');
        std::uint64_t v = h_;
        for (int i = 15; i >= 0; --i) {
            out[static_cast<std::size_t>(i)] = digits[v & 0xf];
            v >>= 4;
        }
        return out;
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::string_view to_string(CommandKind k) noexcept {
    switch (k) {
        case CommandKind::PlaceMagnet: return "PlaceMagnet";
        case CommandKind::MoveMagnet: return "MoveMagnet";
        case CommandKind::RemoveMagnet: return "RemoveMagnet";
        case CommandKind::Pause: return "Pause";
        case CommandKind::Resume: return "Resume";
        case CommandKind::SetSpeed: return "SetSpeed";
        case CommandKind::Reset: return "Reset";
        case CommandKind::LoadScenario: return "LoadScenario";
    }
    return "?";
}

CommandKind command_kind_from_string(std::string_view text) {
    for (auto k : kKinds) {
        if (to_string(k) == text) return k;
    }
    throw ValidationError("unknown command kind '" + std::string(text) + "'");
}

std::string encode_frame(const StateFrame& f) {
    ordered_json j;
    j["type"] = "frame";
    j["schema"] = f.schema;
    j["tick"] = f.tick;
    j["world_tick"] = f.world_tick;
    j["epoch"] = f.epoch;
    j["scenario"] = f.scenario;
    j["paused"] = f.paused;
    j["speed"] = f.speed;
    j["rows"] = f.rows;
    j["cols"] = f.cols;
    j["pitch_mm"] = f.pitch_mm;
    ordered_json cells = ordered_json::array();
    for (const auto& c : f.cells) {
        cells.push_back({{"center", c.center}, {"lit", c.lit}, {"sides", c.sides}});
    }
    j["cells"] = cells;
    ordered_json robots = ordered_json::array();
    for (const auto& r : f.robots) {
        robots.push_back({{"id", r.id},
                          {"name", r.name},
                          {"x", r.pose.x},
                          {"y", r.pose.y},
                          {"theta", r.pose.theta},
                          {"heading", to_string(r.heading)},
                          {"behavior", r.behavior},
                          {"present", r.present}});
    }
    j["robots"] = robots;
    if (f.magnet) {
        j["magnet"] = {{"x", f.magnet->x}, {"y", f.magnet->y}};
    } else {
        j["magnet"] = nullptr;
    }
    return j.dump();
}

StateFrame decode_frame(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("type") != "frame") throw ParseError("not a frame message");
        StateFrame f;
        f.schema = j.at("schema").get<int>();
        f.tick = j.at("tick").get<std::uint64_t>();
        f.world_tick = j.at("world_tick").get<std::uint64_t>();
        f.epoch = j.at("epoch").get<int>();
        f.scenario = j.at("scenario").get<std::string>();
        f.paused = j.at("paused").get<bool>();
        f.speed = j.at("speed").get<double>();
        f.rows = j.at("rows").get<int>();
        f.cols = j.at("cols").get<int>();
        f.pitch_mm = j.at("pitch_mm").get<double>();
        for (const auto& c : j.at("cells")) {
            f.cells.push_back({c.at("center").get<int>(), c.at("lit").get<bool>(),
                               c.at("sides").get<std::array<bool, 4>>()});
        }
        for (const auto& r : j.at("robots")) {
            RobotView v;
            v.id = r.at("id").get<int>();
            v.name = r.at("name").get<std::string>();
            v.pose = {r.at("x").get<double>(), r.at("y").get<double>(), r.at("theta").get<double>()};
            v.heading = side_from_string(r.at("heading").get<std::string>());
            v.behavior = r.at("behavior").get<std::string>();
            v.present = r.at("present").get<bool>();
            f.robots.push_back(std::move(v));
        }
        if (!j.at("magnet").is_null()) {
            f.magnet = Vec2{j["magnet"].at("x").get<double>(), j["magnet"].at("y").get<double>()};
        }
        return f;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad frame: ") + e.what());
    } catch (const ValidationError& e) {
        throw ParseError(std::string("bad frame: ") + e.what());
    }
}

std::string encode_command(const Command& cmd) { return command_json(cmd).dump(); }

std::variant<Command, Reply> decode_command(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        return error_reply(std::nullopt, 0, std::string("malformed message: ") + e.what());
    }
    if (!j.is_object()) return error_reply(std::nullopt, 0, "message must be an object");
    const auto id = read_id(j);
    if (!id) return error_reply(std::nullopt, 0, "missing or invalid request id");
    auto fail = [&](const std::string& msg) { return error_reply(id, 0, msg); };
    auto type_it = j.find("type");
    if (type_it == j.end() || *type_it != "cmd") return fail("expected type \"cmd\"");
    auto kind_it = j.find("kind");
    if (kind_it == j.end() || !kind_it->is_string()) return fail("missing command kind");
    Command cmd;
    cmd.id = *id;
    try {
        cmd.kind = command_kind_from_string(kind_it->get<std::string>());
    } catch (const ValidationError& e) {
        return fail(e.what());
    }
    json args = j.value("args", json::object());
    if (!args.is_object()) return fail("args must be an object");
    auto number = [&](const char* key) -> std::optional<double> {
        auto it = args.find(key);
        if (it == args.end() || !it->is_number()) return std::nullopt;
        return it->get<double>();
    };
    if (needs_position(cmd.kind)) {
        const auto x = number("x");
        const auto y = number("y");
        if (!x || !y) return fail(std::string(to_string(cmd.kind)) + " needs numeric args x and y");
        cmd.x = *x;
        cmd.y = *y;
    } else if (cmd.kind == CommandKind::SetSpeed) {
        const auto m = number("multiplier");
        if (!m) return fail("SetSpeed needs a numeric multiplier");
        cmd.speed = *m;
    } else if (cmd.kind == CommandKind::LoadScenario) {
        auto it = args.find("name");
        if (it == args.end() || !it->is_string()) return fail("LoadScenario needs a name");
        cmd.scenario = it->get<std::string>();
    }
    return cmd;
}

std::string encode_reply(const Reply& reply) {
    ordered_json j;
    j["type"] = reply.type == Reply::Type::Ack ? "ack" : "err";
    j["id"] = reply.id ? id_json(*reply.id) : ordered_json(nullptr);
    if (reply.type == Reply::Type::Ack) {
        j["tick"] = reply.tick;
        if (!reply.message.empty()) j["warning"] = reply.message;
    } else {
        j["message"] = reply.message;
    }
    return j.dump();
}

Reply decode_reply(std::string_view text) {
    try {
        const json j = json::parse(text);
        Reply r;
        const auto type = j.at("type").get<std::string>();
        if (type == "ack") {
            r.type = Reply::Type::Ack;
            r.tick = j.at("tick").get<std::uint64_t>();
            r.message = j.value("warning", std::string());
        } else if (type == "err") {
            r.type = Reply::Type::Err;
            r.message = j.at("message").get<std::string>();
        } else {
            throw ParseError("not a reply: " + type);
        }
        r.id = read_id(j);
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad reply: ") + e.what());
    }
}

Session::Session(scenarios::ScenarioSpec spec, int frame_every, ScenarioResolver resolver)
    : resolver_(std::move(resolver)), frame_every_(frame_every) {
    if (frame_every < 1) throw ValidationError("frame_every must be >= 1");
    restart(std::move(spec));
}

void Session::restart(scenarios::ScenarioSpec spec) {
    spec_ = std::move(spec);
    sim_ = std::make_unique<scenarios::Simulation>(spec_, 0);
}

Reply Session::apply(const Command& cmd) {
    Reply reply{Reply::Type::Ack, cmd.id, tick_, {}};
    World& world = sim_->world();
    auto outside = [&](double x, double y) {
        return !(std::isfinite(x) && std::isfinite(y)) || x < 0.0 || y < 0.0 ||
               x > world.config().extent_x() || y > world.config().extent_y();
    };
    switch (cmd.kind) {
        case CommandKind::PlaceMagnet:
            if (outside(cmd.x, cmd.y)) return error_reply(cmd.id, tick_, "magnet position outside the grid");
            world.place_free_magnet({cmd.x, cmd.y}, spec_.magnet.spec);
            break;
        case CommandKind::MoveMagnet:
            if (outside(cmd.x, cmd.y)) return error_reply(cmd.id, tick_, "magnet position outside the grid");
            if (!world.move_free_magnet({cmd.x, cmd.y})) return error_reply(cmd.id, tick_, "no magnet placed");
            break;
        case CommandKind::RemoveMagnet:
            if (!world.remove_free_magnet()) reply.message = "no magnet was placed";
            break;
        case CommandKind::Pause:
            paused_ = true;
            break;
        case CommandKind::Resume:
            paused_ = false;
            break;
        case CommandKind::SetSpeed: {
            if (!std::isfinite(cmd.speed)) return error_reply(cmd.id, tick_, "speed must be finite");
            const double clamped = std::clamp(cmd.speed, kMinSpeed, kMaxSpeed);
            if (clamped != cmd.speed) {
                std::ostringstream msg;
                msg << "speed " << cmd.speed << " clamped to " << clamped;
                reply.message = msg.str();
            }
            speed_ = clamped;
            break;
        }
        case CommandKind::Reset:
            restart(spec_);
            ++epoch_;
            break;
        case CommandKind::LoadScenario:
            try {
                restart(resolver_(cmd.scenario));
            } catch (const Error& e) {
                return error_reply(cmd.id, tick_, e.what());
            }
            ++epoch_;
            break;
    }
    log_.push_back({tick_, cmd});
    return reply;
}

std::optional<StateFrame> Session::advance() {
    if (paused_ || sim_->finished()) return std::nullopt;
    sim_->step();
    ++tick_;
    if (tick_ % static_cast<std::uint64_t>(frame_every_) != 0) return std::nullopt;
    return frame();
}

StateFrame Session::frame() const {
    StateFrame f;
    const World& world = sim_->world();
    f.tick = tick_;
    f.world_tick = world.tick();
    f.epoch = epoch_;
    f.scenario = spec_.name;
    f.paused = paused_;
    f.speed = speed_;
    f.rows = world.grid().rows();
    f.cols = world.grid().cols();
    f.pitch_mm = world.config().cell_pitch_mm;
    for (const auto& cell : world.grid().cells()) {
        f.cells.push_back({cell.leds.center().value(), cell.leds.pwm_total() > 0, cell.leds.side});
    }
    const auto& controllers = sim_->controllers();
    for (const auto& r : world.robots()) {
        RobotView v;
        v.id = r.id;
        v.name = r.name;
        v.pose = r.pose;
        v.heading = behaviors::nearest_side(r.pose.theta);
        v.behavior = std::string(behaviors::to_string(controllers.at(static_cast<std::size_t>(r.id)).spec().kind));
        v.present = r.present;
        f.robots.push_back(std::move(v));
    }
    if (const auto& m = world.free_magnet()) f.magnet = m->position;
    return f;
}

std::string encode_log(const std::vector<LoggedCommand>& log) {
    std::string out;
    for (const auto& entry : log) {
        ordered_json j;
        j["tick"] = entry.tick;
        j["cmd"] = command_json(entry.command);
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<LoggedCommand> decode_log(std::string_view text) {
    std::vector<LoggedCommand> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            auto decoded = decode_command(j.at("cmd").dump());
            if (auto* reply = std::get_if<Reply>(&decoded)) {
                throw ParseError("command log line " + std::to_string(lineno) + ": " + reply->message, lineno, 1);
            }
            out.push_back({j.at("tick").get<std::uint64_t>(), std::get<Command>(decoded)});
        } catch (const json::exception& e) {
            throw ParseError("command log line " + std::to_string(lineno) + ": " + e.what(), lineno, 1);
        }
    }
    return out;
}

void save_log(const std::vector<LoggedCommand>& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write command log '" + path.string() + "'");
    out << encode_log(log);
    if (!out) throw IoError("failed writing command log '" + path.string() + "'");
}

std::vector<LoggedCommand> load_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read command log '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_log(ss.str());
}

std::vector<std::string> replay(const scenarios::ScenarioSpec& spec, const std::vector<LoggedCommand>& log,
                                std::uint64_t ticks, int frame_every, ScenarioResolver resolver) {
    Session session(spec, frame_every, std::move(resolver));
    std::vector<std::string> frames;
    std::size_t next = 0;
    while (session.tick() < ticks) {
        while (next < log.size() && log[next].tick == session.tick()) session.apply(log[next++].command);
        if (session.paused() || session.finished()) break;
        if (auto f = session.advance()) frames.push_back(encode_frame(*f));
    }
    return frames;
}

std::string frame_stream_hash(const std::vector<std::string>& frames) {
    Fnv1a h;
    for (const auto& f : frames) {
        h.add(f);
        h.add("\n");
    }
    return h.hex();
}

std::pair<std::string, unsigned short> parse_endpoint(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
        throw ValidationError("endpoint must be host:port, got '" + std::string(text) + "'");
    }
    const std::string host(text.substr(0, colon));
    const std::string port_text(text.substr(colon + 1));
    unsigned long port = 0;
    try {
        std::size_t used = 0;
        port = std::stoul(port_text, &used);
        if (used != port_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
        throw ValidationError("bad port '" + port_text + "'");
    }
    if (port > 65535) throw ValidationError("port out of range: " + port_text);
    return {host, static_cast<unsigned short>(port)};
}

}  // namespace gengrid::bridge
