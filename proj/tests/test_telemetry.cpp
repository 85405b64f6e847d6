#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gengrid/scenario.hpp"
#include "gengrid/telemetry.hpp"

using namespace gengrid;
using namespace gengrid::telemetry;

namespace {

// Single robot on a 3x3 grid: occupancy list plus one hop event.
TrialRecord hand_record(int index, CellId start, std::optional<CellId> to) {
    TrialRecord r;
    r.index = index;
    r.rows = 3;
    r.cols = 3;
    const int s = start.row * 3 + start.col;
    r.occupancy = {{s, s, s}};
    if (to) {
        r.occupancy[0].push_back(to->row * 3 + to->col);
        r.hops.push_back({0, start, *to, 1, 3});
    } else {
        r.occupancy[0].push_back(s);
    }
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Reference FNV-1a 64 written from the published constants.
std::uint64_t fnv(const std::vector<unsigned char>& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

void put(std::vector<unsigned char>& out, std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

}  // namespace

TEST_CASE("probability map from hand-built records") {
    std::vector<TrialRecord> recs;
    for (int i = 0; i < 7; ++i) recs.push_back(hand_record(i, {1, 1}, CellId{1, 2}));
    for (int i = 7; i < 9; ++i) recs.push_back(hand_record(i, {1, 1}, CellId{0, 1}));
    recs.push_back(hand_record(9, {1, 1}, std::nullopt));
    recs.push_back(hand_record(10, {2, 0}, CellId{2, 1}));
    const auto map = hop_probability_map(recs);
    CHECK(map.trials == 11);
    REQUIRE(map.cells.size() == 2);
    const auto& c = map.cells.at({1, 1});
    CHECK(c.trials == 10);
    CHECK(c[HopDirection::E] == doctest::Approx(0.7));
    CHECK(c[HopDirection::N] == doctest::Approx(0.2));
    CHECK(c[HopDirection::Stay] == doctest::Approx(0.1));
    CHECK(c[HopDirection::W] == 0.0);
    double sum = 0.0;
    for (double p : c.probability) sum += p;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(map.cells.at({2, 0})[HopDirection::E] == 1.0);
    CHECK_THROWS_AS(hop_probability_map({}), ValidationError);
}

TEST_CASE("diagonal or multi-cell first hops land in the other bucket") {
    auto r = hand_record(0, {0, 0}, CellId{1, 1});
    const auto map = hop_probability_map(std::span<const TrialRecord>(&r, 1));
    CHECK(map.cells.at({0, 0})[HopDirection::Other] == 1.0);
}

TEST_CASE("heatmap pools robot ticks") {
    std::vector<TrialRecord> recs{hand_record(0, {0, 0}, CellId{0, 1}), hand_record(1, {0, 0}, std::nullopt)};
    recs[1].occupancy[0].back() = -1;  // lifted
    const auto h = occupancy_heatmap(recs);
    CHECK(h.samples == 7);
    CHECK(h.at({0, 0}) == doctest::Approx(6.0 / 7.0));
    CHECK(h.at({0, 1}) == doctest::Approx(1.0 / 7.0));
    CHECK(h.at({2, 2}) == 0.0);
    auto other = hand_record(2, {0, 0}, std::nullopt);
    other.rows = 4;
    recs.push_back(other);
    CHECK_THROWS_AS(occupancy_heatmap(recs), ValidationError);
}

TEST_CASE("trace hash matches a reference serialisation") {
    const auto r = hand_record(0, {1, 1}, CellId{1, 2});
    std::vector<unsigned char> b;
    put(b, 3, 4);
    put(b, 3, 4);
    put(b, 1, 8);
    put(b, 4, 8);
    for (int v : {4, 4, 4, 5}) put(b, static_cast<std::uint32_t>(v), 4);
    put(b, 1, 8);
    for (int v : {0, 1, 1, 1, 2}) put(b, static_cast<std::uint32_t>(v), 4);
    put(b, 1, 8);
    put(b, 3, 8);
    char expect[17];
    std::snprintf(expect, sizeof expect, "%016llx", static_cast<unsigned long long>(fnv(b)));
    CHECK(trace_hash(r) == expect);
    auto moved = r;
    moved.hops[0].end_tick = 4;
    CHECK(trace_hash(moved) != trace_hash(r));
}

TEST_CASE("golden trace digests") {
    auto hop = scenarios::builtin_scenario("single_hop");
    hop.seed = 42;
    CHECK(trace_hash(scenarios::run_trial(hop, 0)) == "8bb2b668ebca0ee8");
    auto path = scenarios::builtin_scenario("path2d");
    path.seed = 42;
    CHECK(trace_hash(scenarios::run_trial(path, 0)) == "95dce74ceb0f5935");
}

TEST_CASE("export writes four stable files") {
    auto spec = scenarios::builtin_scenario("single_hop");
    scenarios::RunOptions o;
    o.trials = 20;
    const auto report = scenarios::run_experiment(spec, o);
    const auto base = std::filesystem::temp_directory_path() / "gengrid_export_test";
    std::filesystem::remove_all(base);
    const auto files = export_report(report, base / "a");
    REQUIRE(files.size() == 4);
    for (const char* name : {"report.json", "trials.csv", "probmap.json", "heatmap.csv"}) {
        CHECK(std::filesystem::is_regular_file(base / "a" / name));
    }
    export_report(scenarios::run_experiment(spec, o), base / "b");
    for (const char* name : {"report.json", "trials.csv", "probmap.json", "heatmap.csv"}) {
        CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
    }
    const auto j = nlohmann::json::parse(slurp(base / "a" / "report.json"));
    CHECK(j["scenario"] == "single_hop");
    CHECK(j["trials"] == 20);
    CHECK(j["success_rate"].get<double>() == report.success_rate);
    CHECK(j["trial_summaries"].size() == 20);
    const auto pm = nlohmann::json::parse(slurp(base / "a" / "probmap.json"));
    CHECK(pm["cells"].size() == 3);
    std::filesystem::remove_all(base);
}

TEST_CASE("trials csv round-trips") {
    auto spec = scenarios::builtin_scenario("transport");
    scenarios::RunOptions o;
    o.trials = 6;
    const auto report = scenarios::run_experiment(spec, o);
    const auto rows = parse_trials_csv(trials_csv(report));
    REQUIRE(rows.size() == report.records.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& rec = report.records[i];
        CHECK(rows[i].index == rec.index);
        CHECK(rows[i].seed == rec.seed);
        CHECK(rows[i].success == rec.success);
        CHECK(rows[i].hops == static_cast<int>(rec.hops.size()));
        CHECK(rows[i].wall_ticks == rec.wall_ticks);
        REQUIRE(rows[i].final_cells.size() == 2);
        CHECK(rows[i].final_cells[0] == rec.final_cell(0));
        CHECK(rows[i].final_cells[1] == rec.final_cell(1));
    }
    CHECK_THROWS_AS(parse_trials_csv("index,seed\n1,2\n"), ParseError);
    CHECK_THROWS_AS(parse_trials_csv("index,seed,success,final_cell,hops,wall_ticks\n1,x,1,0:0,1,0\n"), ParseError);
}

TEST_CASE("heatmap csv lists every cell") {
    Heatmap h;
    h.rows = 2;
    h.cols = 2;
    h.fraction = {0.5, 0.25, 0.25, 0.0};
    CHECK(heatmap_csv(h) == "row,col,fraction\n0,0,0.5\n0,1,0.25\n1,0,0.25\n1,1,0\n");
}

TEST_CASE("export to an unwritable location raises an io error") {
    const auto blocker = std::filesystem::temp_directory_path() / "gengrid_blocker";
    std::filesystem::remove_all(blocker);
    { std::ofstream(blocker) << "x"; }
    auto spec = scenarios::builtin_scenario("sensor_validation");
    const auto report = scenarios::run_experiment(spec);
    try {
        export_report(report, blocker / "out");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("gengrid_blocker") != std::string::npos);
    }
    std::filesystem::remove(blocker);
}
