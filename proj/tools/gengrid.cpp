#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "gengrid/bridge.hpp"
#include "gengrid/scenario.hpp"
#include "gengrid/telemetry.hpp"

namespace {

using namespace gengrid;

constexpr int kUsageError = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

/// Unknown scenarios are usage errors; broken scenario files are not.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

scenarios::ScenarioSpec resolve(const std::string& name) {
    try {
        return scenarios::find_scenario(name);
    } catch (const LookupError& e) {
        throw UsageError(e.what());
    }
}

int cmd_run(const std::string& name, std::optional<int> trials, std::optional<std::uint64_t> seed,
            bool noiseless, const std::string& out) {
    const auto spec = resolve(name);
    scenarios::RunOptions opts;
    opts.trials = trials;
    opts.seed = seed;
    opts.noiseless = noiseless;
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = scenarios::run_experiment(spec, opts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::printf("scenario      %s\n", report.name.c_str());
    std::printf("trials        %zu (seed %llu)\n", report.records.size(),
                static_cast<unsigned long long>(report.seed));
    std::printf("noise         sigma_rot=%g sigma_drive=%g duty_mismatch=%g\n", report.noise.sigma_rot,
                report.noise.sigma_drive, report.noise.duty_mismatch);
    std::printf("success rate  %.4f (%d/%zu)\n", report.success_rate, report.successes, report.records.size());
    if (report.per_start.size() > 1) {
        for (const auto& [cell, stats] : report.per_start) {
            std::printf("  start %-6s %.4f (%d/%d)\n", to_string(cell).c_str(), stats.rate(), stats.successes,
                        stats.trials);
        }
    }
    if (!spec.wall_cells().empty()) std::printf("safe fraction %.4f\n", report.safe_fraction);
    std::printf("trace[0]      %s\n", telemetry::trace_hash(report.records.front()).c_str());
    std::printf("elapsed       %.2f s\n", secs);
    if (!out.empty()) {
        for (const auto& p : telemetry::export_report(report, out)) std::printf("wrote %s\n", p.string().c_str());
    }
    return 0;
}

int cmd_list() {
    for (const auto& name : scenarios::builtin_names()) {
        const auto spec = scenarios::builtin_scenario(name);
        std::printf("%-18s %s\n", name.c_str(), spec.description.c_str());
    }
    return 0;
}

int cmd_calibrate(int budget, int trials, std::uint64_t seed, const std::string& write) {
    scenarios::CalibrationOptions opts;
    opts.budget = budget;
    opts.trials = trials;
    opts.seed = seed;
    const auto result = scenarios::calibrate_noise({}, opts);
    std::printf("sigma_rot     %.6f\n", result.noise.sigma_rot);
    std::printf("sigma_drive   %.6f\n", result.noise.sigma_drive);
    std::printf("single_hop    %.4f\n", result.single_hop_rate);
    std::printf("path2d        %.4f\n", result.path_rate);
    std::printf("residual      %.6f%s\n", result.residual, result.residual_flag ? " (targets missed)" : "");
    std::printf("evaluations   %d\n", result.evaluations);
    if (!write.empty()) {
        scenarios::CalibratedNoise c{result.noise, result.single_hop_rate, result.path_rate, trials};
        std::ofstream f(write, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write '" + write + "'");
        f << scenarios::noise_defaults_json(c);
        std::printf("wrote %s\n", write.c_str());
    }
    return result.residual_flag ? 1 : 0;
}

int cmd_serve(const std::string& name, const std::string& listen, double speed, const std::string& log,
              std::optional<double> duration_s) {
    const auto spec = resolve(name);
    bridge::ServerOptions opts;
    try {
        std::tie(opts.host, opts.port) = bridge::parse_endpoint(listen);
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    if (!log.empty()) opts.command_log = log;
    bridge::Session session(spec);
    if (speed != 1.0) session.apply({{"cli", false}, bridge::CommandKind::SetSpeed, 0, 0, speed, {}});
    bridge::Server server(std::move(session), opts);
    server.start();
    std::printf("serving %s on ws://%s:%u\n", spec.name.c_str(), opts.host.c_str(), server.port());
    std::fflush(stdout);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const auto t0 = std::chrono::steady_clock::now();
    while (!g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (duration_s &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >= *duration_s) {
            break;
        }
    }
    server.stop();
    return 0;
}

int cmd_replay(const std::string& name, const std::string& log, std::uint64_t ticks) {
    const auto spec = resolve(name);
    const auto frames = bridge::replay(spec, bridge::load_log(log), ticks);
    std::printf("frames        %zu\n", frames.size());
    std::printf("stream hash   %s\n", bridge::frame_stream_hash(frames).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Swarm grid platform simulator"};
    app.require_subcommand(1);

    std::string scenario;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    bool noiseless = false;
    std::string out;
    auto* run = app.add_subcommand("run", "Run a scenario's trials and print the aggregate");
    run->add_option("--scenario", scenario, "Builtin name or path to a .scn file")->required();
    run->add_option("--trials", trials, "Override the trial count")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Override the base seed");
    run->add_flag("--noiseless", noiseless, "Disable all motion noise");
    run->add_option("--out", out, "Directory for report.json, trials.csv, probmap.json, heatmap.csv");

    auto* list = app.add_subcommand("list", "List builtin scenarios");

    int budget = 60;
    int cal_trials = 500;
    std::uint64_t cal_seed = scenarios::CalibrationOptions{}.seed;
    std::string write;
    auto* cal = app.add_subcommand("calibrate", "Fit the noise model to the single-hop and path targets");
    cal->add_option("--budget", budget, "Maximum evaluations")->check(CLI::PositiveNumber);
    cal->add_option("--trials", cal_trials, "Trials per scenario per evaluation")->check(CLI::PositiveNumber);
    cal->add_option("--seed", cal_seed, "Common base seed");
    cal->add_option("--write", write, "Write the result as a noise defaults file");

    std::string listen = "127.0.0.1:8089";
    double speed = 1.0;
    std::string log;
    std::optional<double> duration;
    auto* serve = app.add_subcommand("serve", "Start the live websocket bridge");
    serve->add_option("--scenario", scenario, "Builtin name or path")->required();
    serve->add_option("--listen", listen, "host:port")->capture_default_str();
    serve->add_option("--speed", speed, "Initial speed multiplier");
    serve->add_option("--command-log", log, "Record applied commands (JSON lines)");
    serve->add_option("--duration", duration, "Stop after this many wall-clock seconds");

    std::uint64_t ticks = 0;
    auto* rep = app.add_subcommand("replay", "Replay a command log and print the frame stream hash");
    rep->add_option("--scenario", scenario, "Builtin name or path")->required();
    rep->add_option("--log", log, "Command log")->required();
    rep->add_option("--ticks", ticks, "Session ticks to simulate")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (*run) return cmd_run(scenario, trials, seed, noiseless, out);
        if (*list) return cmd_list();
        if (*cal) return cmd_calibrate(budget, cal_trials, cal_seed, write);
        if (*serve) return cmd_serve(scenario, listen, speed, log, duration);
        if (*rep) return cmd_replay(scenario, log, ticks);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "gengrid: %s\n", e.what());
        return kUsageError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "gengrid: %s\n", e.what());
        return 1;
    }
    return kUsageError;
}
