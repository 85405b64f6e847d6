#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gengrid/behaviors.hpp"
#include "gengrid/grid.hpp"
#include "gengrid/record.hpp"
#include "gengrid/rng.hpp"
#include "gengrid/world.hpp"

namespace gengrid::scenarios {

inline constexpr int kScenarioSchema = 1;

struct RobotSpec {
    std::string name;
    /// Alternative start poses; trial i uses starts[i % starts.size()].
    std::vector<Pose> starts;
    behaviors::BehaviorSpec behavior;
    MagnetSpec magnet;
    std::optional<std::uint64_t> lift_at_tick;
};

struct MagnetWaypoint {
    std::uint64_t tick = 0;
    Vec2 position;
};

struct MagnetScript {
    enum class Mode { None, Scripted, Interactive } mode = Mode::None;
    /// Positions are linearly interpolated between waypoints; before the
    /// first waypoint no magnet is present.
    std::vector<MagnetWaypoint> waypoints;
    std::optional<std::uint64_t> remove_at_tick;
    MagnetSpec spec;

    /// Magnet position at `tick`, nullopt when absent.
    std::optional<Vec2> position_at(std::uint64_t tick) const;
};

struct CellOverride {
    CellId cell;
    CellProgram program;
};

struct SuccessSpec {
    std::string predicate;  // see kPredicates
    std::map<std::string, double> params;
};

inline constexpr std::string_view kPredicates[] = {
    "max_neighbor", "reach_max", "avoid_walls", "transport", "flee", "evaporate", "sensor_match",
};

struct ScenarioSpec {
    int schema = kScenarioSchema;
    std::string name;
    std::string figure;
    std::string description;
    WorldConfig world;
    bool calibrated_noise = false;  // world.noise came from the calibrated defaults
    CellProgram default_program;
    /// rows x cols center intensities; empty => all 0.
    std::vector<std::vector<int>> intensities;
    std::vector<CellOverride> programs;
    std::vector<RobotSpec> robots;
    MagnetScript magnet;
    std::uint64_t duration_ticks = 1;
    int trials = 1;
    std::uint64_t seed = 0;
    SuccessSpec success;

    int center_intensity(CellId id) const;
    CellProgram program_at(CellId id) const;
    /// Cells loaded with VirtualWall.
    std::vector<CellId> wall_cells() const;
    /// Number of distinct start configurations (max over robots).
    std::size_t start_variants() const;
};

/// Noise defaults produced by calibrate_noise, with the rates they achieved.
struct CalibratedNoise {
    NoiseModel noise;
    double single_hop_rate = 0.0;
    double path_rate = 0.0;
    int trials = 0;
};

/// The checked-in defaults (compiled into the library).
const CalibratedNoise& calibrated_noise();
CalibratedNoise parse_noise_defaults(const std::string& text);
std::string noise_defaults_json(const CalibratedNoise& value);

/// Parses and validates a scenario document. Syntax errors throw ParseError
/// with line/column; semantic problems are gathered into one ParseError.
ScenarioSpec load_scenario(const std::string& text);
ScenarioSpec load_scenario_file(const std::filesystem::path& path);
/// Resolve by file path, then GENGRID_SCENARIO_PATH directories (<name>.scn),
/// then builtin names. Throws LookupError.
ScenarioSpec find_scenario(const std::string& name_or_path);

std::vector<ScenarioSpec> builtin_scenarios();
std::vector<std::string> builtin_names();
/// Throws LookupError.
ScenarioSpec builtin_scenario(std::string_view name);
/// Raw bundled document text.
std::string_view builtin_source(std::string_view name);

/// One running trial: world, controllers and recording, stepped tick by tick.
class Simulation {
public:
    Simulation(const ScenarioSpec& spec, int trial_index);

    /// Advance one tick: scripted events, sensing, cell programs, robot
    /// decisions, kinematics, recording.
    void step();
    void run_to_end();
    bool finished() const noexcept { return world_.tick() >= spec_.duration_ticks; }

    const ScenarioSpec& spec() const noexcept { return spec_; }
    const World& world() const noexcept { return world_; }
    World& world() noexcept { return world_; }
    const std::vector<behaviors::Controller>& controllers() const noexcept { return controllers_; }
    std::uint64_t tick() const noexcept { return world_.tick(); }
    const TrialRecord& record() const noexcept { return record_; }

    /// Interactive sessions: a script, when present, overrides the magnet each tick.
    bool magnet_scripted() const noexcept {
        return spec_.magnet.mode == MagnetScript::Mode::Scripted;
    }

    /// Evaluates the success predicate and returns the completed record.
    TrialRecord finish();

private:
    void record_tick();

    ScenarioSpec spec_;
    World world_;
    Rng rng_;
    std::vector<behaviors::Controller> controllers_;
    std::vector<std::optional<CellId>> hop_origin_;
    std::vector<std::uint64_t> hop_start_tick_;
    std::vector<int> last_center_;
    std::vector<bool> wall_;
    std::optional<CellId> first_object_;  // first uniquely lit transport cell
    TrialRecord record_;
};

TrialRecord run_trial(const ScenarioSpec& spec, int trial_index);

struct RunOptions {
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    bool noiseless = false;
};

ExperimentReport run_experiment(ScenarioSpec spec, const RunOptions& options = {});
/// Aggregates already-run records (ordered by trial index) into a report.
ExperimentReport aggregate(const ScenarioSpec& spec, std::vector<TrialRecord> records);

struct CalibrationTargets {
    double single_hop = 0.90;
    double path = 0.76;
};

struct CalibrationResult {
    NoiseModel noise;
    double single_hop_rate = 0.0;
    double path_rate = 0.0;
    double residual = 0.0;       // squared error at the optimum
    bool residual_flag = false;  // some target missed by more than `tolerance`
    int evaluations = 0;
};

struct CalibrationOptions {
    int budget = 60;
    int trials = 500;
    std::uint64_t seed = 20240;
    double tolerance = 0.05;
    double max_sigma_rot = 0.8;
    double max_sigma_drive = 0.04;
};

/// Pattern search over (sigma_rot, sigma_drive) against the single_hop and
/// path2d builtins. Deterministic given options.seed.
CalibrationResult calibrate_noise(const CalibrationTargets& targets,
                                  const CalibrationOptions& options = {});

}  // namespace gengrid::scenarios
