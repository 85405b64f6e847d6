#include <doctest.h>

#include <set>

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "gengrid/bridge.hpp"

using namespace gengrid;
using namespace gengrid::bridge;
using json = nlohmann::json;

namespace {

Command cmd(CommandKind kind, std::string id = "c1") {
    Command c;
    c.id = {std::move(id), false};
    c.kind = kind;
    return c;
}

Command at(CommandKind kind, double x, double y, std::string id = "c1") {
    auto c = cmd(kind, std::move(id));
    c.x = x;
    c.y = y;
    return c;
}

Reply reply_of(std::string_view text) {
    auto d = decode_command(text);
    REQUIRE(std::holds_alternative<Reply>(d));
    return std::get<Reply>(d);
}

Session interactive() { return Session(scenarios::builtin_scenario("shepherding_interactive")); }

double distance(const Pose& p, Vec2 m) { return std::hypot(p.x - m.x, p.y - m.y); }

}  // namespace

TEST_CASE("every command kind survives encode and decode") {
    std::vector<Command> all;
    all.push_back(at(CommandKind::PlaceMagnet, 10.5, 20.25, "a"));
    all.push_back(at(CommandKind::MoveMagnet, 1.0, 2.0, "b"));
    all.push_back(cmd(CommandKind::RemoveMagnet, "c"));
    all.push_back(cmd(CommandKind::Pause, "d"));
    all.push_back(cmd(CommandKind::Resume, "e"));
    auto speed = cmd(CommandKind::SetSpeed, "f");
    speed.speed = 2.5;
    all.push_back(speed);
    all.push_back(cmd(CommandKind::Reset, "g"));
    auto load = cmd(CommandKind::LoadScenario, "h");
    load.scenario = "pheromone";
    all.push_back(load);
    auto numeric = cmd(CommandKind::Pause);
    numeric.id = {"17", true};
    all.push_back(numeric);
    for (const auto& c : all) {
        const auto text = encode_command(c);
        const auto j = json::parse(text);
        CHECK(j["type"] == "cmd");
        CHECK(j["kind"] == std::string(to_string(c.kind)));
        auto d = decode_command(text);
        REQUIRE(std::holds_alternative<Command>(d));
        CHECK(std::get<Command>(d) == c);
    }
    CHECK(json::parse(encode_command(numeric))["id"] == 17);
}

TEST_CASE("hand-written client messages decode") {
    auto d = decode_command(R"({"type":"cmd","id":3,"kind":"PlaceMagnet","args":{"x":37.5,"y":112.5}})");
    REQUIRE(std::holds_alternative<Command>(d));
    const auto& c = std::get<Command>(d);
    CHECK(c.id == RequestId{"3", true});
    CHECK(c.x == 37.5);
    CHECK(c.y == 112.5);
    d = decode_command(R"({"type":"cmd","id":"s","kind":"SetSpeed","args":{"multiplier":4}})");
    CHECK(std::get<Command>(d).speed == 4.0);
    d = decode_command(R"({"type":"cmd","id":"p","kind":"Pause"})");
    CHECK(std::get<Command>(d).kind == CommandKind::Pause);
}

TEST_CASE("malformed commands produce error replies") {
    auto r = reply_of("{not json");
    CHECK(r.type == Reply::Type::Err);
    CHECK(!r.id);
    r = reply_of("[1,2]");
    CHECK(r.type == Reply::Type::Err);
    r = reply_of(R"({"type":"cmd","kind":"Pause"})");
    CHECK(!r.id);
    r = reply_of(R"({"type":"cmd","id":"x","kind":"Fly"})");
    CHECK(r.id == RequestId{"x", false});
    CHECK(r.message.find("Fly") != std::string::npos);
    r = reply_of(R"({"type":"cmd","id":"x","kind":"PlaceMagnet","args":{"x":1}})");
    CHECK(r.type == Reply::Type::Err);
    r = reply_of(R"({"type":"cmd","id":"x","kind":"SetSpeed","args":{"multiplier":"fast"}})");
    CHECK(r.type == Reply::Type::Err);
    r = reply_of(R"({"type":"frame","id":"x","kind":"Pause"})");
    CHECK(r.type == Reply::Type::Err);
    r = reply_of(R"({"type":"cmd","id":"x","kind":"LoadScenario","args":{}})");
    CHECK(r.type == Reply::Type::Err);
    r = reply_of(R"({"type":"cmd","id":{"a":1},"kind":"Pause"})");
    CHECK(!r.id);
}

TEST_CASE("replies and frames round-trip") {
    const Reply ack{Reply::Type::Ack, RequestId{"9", true}, 14, "speed 50 clamped to 20"};
    CHECK(decode_reply(encode_reply(ack)) == ack);
    const auto aj = json::parse(encode_reply(ack));
    CHECK(aj["type"] == "ack");
    CHECK(aj["id"] == 9);
    CHECK(aj["tick"] == 14);
    CHECK(aj["warning"] == "speed 50 clamped to 20");
    const Reply err{Reply::Type::Err, std::nullopt, 0, "bad"};
    CHECK(decode_reply(encode_reply(err)) == err);
    CHECK(json::parse(encode_reply(err))["id"].is_null());
    CHECK_THROWS_AS(decode_reply("{\"type\":\"frame\"}"), ParseError);

    auto s = interactive();
    s.apply(at(CommandKind::PlaceMagnet, 100.0, 120.0));
    for (int i = 0; i < 7; ++i) s.advance();
    const auto f = s.frame();
    const auto back = decode_frame(encode_frame(f));
    CHECK(back == f);
    CHECK(back.cells.size() == 25);
    CHECK(back.robots.size() == 2);
    CHECK(back.magnet == Vec2{100.0, 120.0});
    const auto fj = json::parse(encode_frame(f));
    for (const char* key : {"type", "schema", "tick", "world_tick", "epoch", "scenario", "paused", "speed", "rows",
                            "cols", "pitch_mm", "cells", "robots", "magnet"}) {
        CHECK_MESSAGE(fj.contains(key), key);
    }
    CHECK_THROWS_AS(decode_frame("{}"), ParseError);
}

TEST_CASE("session pause, resume and frame cadence") {
    auto s = interactive();
    int frames = 0;
    for (int i = 0; i < 20; ++i) frames += s.advance().has_value();
    CHECK(frames == 4);
    CHECK(s.tick() == 20);
    CHECK(s.apply(cmd(CommandKind::Pause)).type == Reply::Type::Ack);
    CHECK(!s.advance());
    CHECK(s.tick() == 20);
    CHECK(s.frame().paused);
    s.apply(cmd(CommandKind::Resume));
    s.advance();
    CHECK(s.tick() == 21);
}

TEST_CASE("session speed clamp") {
    auto s = interactive();
    auto c = cmd(CommandKind::SetSpeed);
    c.speed = 50.0;
    auto r = s.apply(c);
    CHECK(r.type == Reply::Type::Ack);
    CHECK(!r.message.empty());
    CHECK(s.speed() == kMaxSpeed);
    c.speed = 0.0;
    s.apply(c);
    CHECK(s.speed() == kMinSpeed);
    c.speed = 3.0;
    r = s.apply(c);
    CHECK(r.message.empty());
    CHECK(s.speed() == 3.0);
    c.speed = std::nan("");
    CHECK(s.apply(c).type == Reply::Type::Err);
}

TEST_CASE("session magnet commands") {
    auto s = interactive();
    auto r = s.apply(at(CommandKind::MoveMagnet, 10, 10));
    CHECK(r.type == Reply::Type::Err);
    r = s.apply(cmd(CommandKind::RemoveMagnet));
    CHECK(r.type == Reply::Type::Ack);
    CHECK(!r.message.empty());
    CHECK(s.apply(at(CommandKind::PlaceMagnet, -1, 10)).type == Reply::Type::Err);
    CHECK(s.apply(at(CommandKind::PlaceMagnet, 10, 400)).type == Reply::Type::Err);
    CHECK(s.apply(at(CommandKind::PlaceMagnet, 10, 10)).type == Reply::Type::Ack);
    CHECK(s.frame().magnet == Vec2{10, 10});
    CHECK(s.apply(at(CommandKind::MoveMagnet, 20, 30)).type == Reply::Type::Ack);
    CHECK(s.frame().magnet == Vec2{20, 30});
    r = s.apply(cmd(CommandKind::RemoveMagnet));
    CHECK(r.message.empty());
    CHECK(!s.frame().magnet);
    // Rejected commands are not logged.
    CHECK(s.log().size() == 4);
}

TEST_CASE("session reset and scenario load") {
    auto s = interactive();
    for (int i = 0; i < 12; ++i) s.advance();
    s.apply(at(CommandKind::PlaceMagnet, 10, 10));
    auto r = s.apply(cmd(CommandKind::Reset));
    CHECK(r.tick == 12);
    auto f = s.frame();
    CHECK(f.tick == 12);
    CHECK(f.world_tick == 0);
    CHECK(f.epoch == 1);
    CHECK(!f.magnet);
    auto load = cmd(CommandKind::LoadScenario);
    load.scenario = "pheromone";
    CHECK(s.apply(load).type == Reply::Type::Ack);
    f = s.frame();
    CHECK(f.scenario == "pheromone");
    CHECK(f.epoch == 2);
    load.scenario = "does_not_exist";
    r = s.apply(load);
    CHECK(r.type == Reply::Type::Err);
    CHECK(s.frame().scenario == "pheromone");
    for (int i = 0; i < 10; ++i) s.advance();
    CHECK(s.frame().world_tick == 10);
    CHECK(s.tick() == 22);
}

TEST_CASE("finished sessions stop advancing") {
    auto s = Session(scenarios::builtin_scenario("pheromone"), 1);
    std::uint64_t n = 0;
    while (s.advance()) ++n;
    CHECK(n == s.simulation().spec().duration_ticks);
    CHECK(s.finished());
}

TEST_CASE("shepherding robots recede from a placed magnet") {
    auto s = interactive();
    const Vec2 m{112.5, 187.5};  // cell (2,1), between both robots
    const auto f0 = s.frame();
    s.apply(at(CommandKind::PlaceMagnet, m.x, m.y));
    for (int i = 0; i < 600; ++i) s.advance();
    const auto f1 = s.frame();
    for (std::size_t r = 0; r < 2; ++r) {
        CHECK(distance(f1.robots[r].pose, m) > distance(f0.robots[r].pose, m) + 20.0);
    }
    CHECK(f1.cells[2 * 5 + 1].lit);
}

TEST_CASE("replaying a command log reproduces the frame stream") {
    auto s = interactive();
    std::vector<std::string> live;
    auto step = [&](int n) {
        for (int i = 0; i < n; ++i) {
            if (auto f = s.advance()) live.push_back(encode_frame(*f));
        }
    };
    step(13);
    s.apply(at(CommandKind::PlaceMagnet, 112.5, 187.5, "1"));
    step(40);
    s.apply(at(CommandKind::MoveMagnet, 150.0, 187.5, "2"));
    auto sp = cmd(CommandKind::SetSpeed, "3");
    sp.speed = 4.0;
    s.apply(sp);
    step(100);
    s.apply(cmd(CommandKind::Reset, "4"));
    step(30);
    s.apply(cmd(CommandKind::RemoveMagnet, "5"));
    step(17);
    const auto log = decode_log(encode_log(s.log()));
    CHECK(log == s.log());
    const auto path = std::filesystem::temp_directory_path() / "gengrid_replay_test.jsonl";
    save_log(log, path);
    const auto loaded = load_log(path);
    std::filesystem::remove(path);
    CHECK(loaded == log);
    const auto replayed = replay(scenarios::builtin_scenario("shepherding_interactive"), loaded, s.tick());
    CHECK(replayed == live);
    CHECK(frame_stream_hash(replayed) == frame_stream_hash(live));
    CHECK(frame_stream_hash({}) != frame_stream_hash(live));
    CHECK_THROWS_AS(decode_log("{\"tick\":1}\n"), ParseError);
    CHECK_THROWS_AS(load_log("/nonexistent/dir/log.jsonl"), IoError);
}

TEST_CASE("endpoint parsing") {
    CHECK(parse_endpoint("127.0.0.1:8089") == std::pair<std::string, unsigned short>{"127.0.0.1", 8089});
    CHECK(parse_endpoint("0.0.0.0:0").second == 0);
    CHECK_THROWS_AS(parse_endpoint("localhost"), ValidationError);
    CHECK_THROWS_AS(parse_endpoint("h:70000"), ValidationError);
    CHECK_THROWS_AS(parse_endpoint("h:12x"), ValidationError);
    CHECK_THROWS_AS(parse_endpoint(":80"), ValidationError);
}

TEST_CASE("a placed magnet lights its cell in the next frame") {
    auto s = interactive();
    s.apply(at(CommandKind::PlaceMagnet, 37.5, 187.5));
    std::optional<StateFrame> f;
    while (!f) f = s.advance();
    // robots carry their own magnets, so their cells light too
    std::set<int> expect{2 * 5 + 0};
    for (const auto& r : f->robots) expect.insert(static_cast<int>(r.pose.y / 75.0) * 5 + static_cast<int>(r.pose.x / 75.0));
    REQUIRE(expect.size() == 3);
    for (int i = 0; i < 25; ++i) CHECK(f->cells[static_cast<std::size_t>(i)].lit == (expect.count(i) > 0));
}

TEST_CASE("pause and resume leave no gaps in frame ticks") {
    auto s = interactive();
    std::vector<std::uint64_t> ticks;
    auto run = [&](int n) {
        for (int i = 0; i < n; ++i) {
            if (auto f = s.advance()) ticks.push_back(f->tick);
        }
    };
    run(23);
    s.apply(cmd(CommandKind::Pause));
    run(50);
    s.apply(cmd(CommandKind::Resume));
    run(30);
    REQUIRE(ticks.size() == 10);
    for (std::size_t i = 0; i < ticks.size(); ++i) CHECK(ticks[i] == 5 * (i + 1));
}

TEST_CASE("robots recede from a magnet dragged along the next column") {
    auto s = interactive();
    auto col_of = [](const RobotView& r) { return static_cast<int>(r.pose.x / 75.0); };
    s.apply(at(CommandKind::PlaceMagnet, 37.5, 37.5));
    std::array<int, 2> last{1, 1};
    for (int step = 0; step <= 80; ++step) {
        s.apply(at(CommandKind::MoveMagnet, 37.5, 37.5 + 300.0 * step / 80.0));
        for (int i = 0; i < 10; ++i) {
            if (auto f = s.advance()) {
                for (std::size_t r = 0; r < 2; ++r) {
                    const int c = col_of(f->robots[r]);
                    CHECK(c >= last[r]);
                    last[r] = c;
                }
            }
        }
    }
    CHECK(last[0] >= 2);
    CHECK(last[1] >= 2);
}
