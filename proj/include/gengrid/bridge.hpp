#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gengrid/scenario.hpp"

namespace gengrid::bridge {

inline constexpr int kProtocolVersion = 1;
inline constexpr double kMinSpeed = 0.1;
inline constexpr double kMaxSpeed = 20.0;

enum class CommandKind : std::uint8_t {
    PlaceMagnet,
    MoveMagnet,
    RemoveMagnet,
    Pause,
    Resume,
    SetSpeed,
    Reset,
    LoadScenario,
};

std::string_view to_string(CommandKind k) noexcept;
/// Throws ValidationError.
CommandKind command_kind_from_string(std::string_view text);

/// Request ids are echoed back verbatim; clients may use numbers or strings.
struct RequestId {
    std::string text;
    bool numeric = false;
    friend bool operator==(const RequestId&, const RequestId&) = default;
};

struct Command {
    RequestId id;
    CommandKind kind = CommandKind::Pause;
    double x = 0.0;  // mm, world frame
    double y = 0.0;
    double speed = 1.0;
    std::string scenario;
    friend bool operator==(const Command&, const Command&) = default;
};

struct Reply {
    enum class Type : std::uint8_t { Ack, Err } type = Type::Ack;
    std::optional<RequestId> id;  // absent when the request id could not be read
    std::uint64_t tick = 0;
    std::string message;  // error text, or an optional warning on acks
    friend bool operator==(const Reply&, const Reply&) = default;
};

struct CellView {
    int center = 0;
    bool lit = false;
    std::array<bool, 4> sides{};
    friend bool operator==(const CellView&, const CellView&) = default;
};

struct RobotView {
    int id = 0;
    std::string name;
    Pose pose;
    Side heading = Side::E;
    std::string behavior;
    bool present = true;
    friend bool operator==(const RobotView&, const RobotView&) = default;
};

struct StateFrame {
    int schema = kProtocolVersion;
    std::uint64_t tick = 0;        // session tick, never resets
    std::uint64_t world_tick = 0;  // simulation tick, restarts on Reset/LoadScenario
    int epoch = 0;                 // bumped on Reset/LoadScenario
    std::string scenario;
    bool paused = false;
    double speed = 1.0;
    int rows = 0;
    int cols = 0;
    double pitch_mm = 0.0;
    std::vector<CellView> cells;  // row-major
    std::vector<RobotView> robots;
    std::optional<Vec2> magnet;
    friend bool operator==(const StateFrame&, const StateFrame&) = default;
};

std::string encode_frame(const StateFrame& frame);
/// Throws ParseError.
StateFrame decode_frame(std::string_view text);
std::string encode_command(const Command& cmd);
/// Returns the command or an error reply citing the request id when readable.
std::variant<Command, Reply> decode_command(std::string_view text);
std::string encode_reply(const Reply& reply);
/// Throws ParseError.
Reply decode_reply(std::string_view text);

struct LoggedCommand {
    std::uint64_t tick = 0;  // session tick the command took effect at
    Command command;
    friend bool operator==(const LoggedCommand&, const LoggedCommand&) = default;
};

using ScenarioResolver = std::function<scenarios::ScenarioSpec(const std::string&)>;

/// The simulation side of a live session. Single-threaded; the server drives
/// it from its loop thread, tests drive it directly.
class Session {
public:
    explicit Session(scenarios::ScenarioSpec spec, int frame_every = 5,
                     ScenarioResolver resolver = scenarios::find_scenario);

    /// Applies at the current tick boundary and logs the command.
    Reply apply(const Command& cmd);
    /// Steps one tick unless paused or the scenario ran out. Returns a frame
    /// on every frame_every-th session tick.
    std::optional<StateFrame> advance();

    StateFrame frame() const;
    std::uint64_t tick() const noexcept { return tick_; }
    bool paused() const noexcept { return paused_; }
    bool finished() const noexcept { return sim_->finished(); }
    double speed() const noexcept { return speed_; }
    int frame_every() const noexcept { return frame_every_; }
    const scenarios::Simulation& simulation() const noexcept { return *sim_; }
    const std::vector<LoggedCommand>& log() const noexcept { return log_; }

private:
    void restart(scenarios::ScenarioSpec spec);

    scenarios::ScenarioSpec spec_;
    std::unique_ptr<scenarios::Simulation> sim_;
    ScenarioResolver resolver_;
    int frame_every_;
    std::uint64_t tick_ = 0;
    int epoch_ = 0;
    bool paused_ = false;
    double speed_ = 1.0;
    std::vector<LoggedCommand> log_;
};

/// One JSON object per line.
std::string encode_log(const std::vector<LoggedCommand>& log);
/// Throws ParseError.
std::vector<LoggedCommand> decode_log(std::string_view text);
void save_log(const std::vector<LoggedCommand>& log, const std::filesystem::path& path);
std::vector<LoggedCommand> load_log(const std::filesystem::path& path);

/// Re-runs a session from `spec`, applying each logged command at its tick,
/// for `ticks` session ticks. Returns the encoded frames in emission order.
std::vector<std::string> replay(const scenarios::ScenarioSpec& spec, const std::vector<LoggedCommand>& log,
                                std::uint64_t ticks, int frame_every = 5,
                                ScenarioResolver resolver = scenarios::find_scenario);

/// FNV-1a 64 over the frames separated by newlines, 16 hex digits.
std::string frame_stream_hash(const std::vector<std::string>& frames);

struct ServerOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 8089;  // 0 picks a free port
    /// Real time per tick at speed 1; defaults to the scenario's tick_ms.
    std::optional<double> tick_period_ms;
    std::size_t max_queued_frames = 64;
    std::optional<std::filesystem::path> command_log;
};

/// "host:port" -> (host, port). Throws ValidationError.
std::pair<std::string, unsigned short> parse_endpoint(std::string_view text);

/// Websocket front end. One loop thread owns the Session; network threads
/// only exchange messages with it through queues.
class Server {
public:
    Server(Session session, ServerOptions options = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts both threads. Throws Error when the bind fails.
    void start();
    void stop();
    unsigned short port() const noexcept;
    bool running() const noexcept;
    /// Frames not sent to some client because its queue was full.
    std::uint64_t dropped_frames() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gengrid::bridge
