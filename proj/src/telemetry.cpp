#include "gengrid/telemetry.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gengrid::telemetry {

namespace {

using nlohmann::ordered_json;

HopDirection direction_between(CellId from, CellId to) {
    const int dr = to.row - from.row;
    const int dc = to.col - from.col;
    if (dr == 0 && dc == 0) return HopDirection::Stay;
    if (dr == -1 && dc == 0) return HopDirection::N;
    if (dr == 1 && dc == 0) return HopDirection::S;
    if (dr == 0 && dc == 1) return HopDirection::E;
    if (dr == 0 && dc == -1) return HopDirection::W;
    return HopDirection::Other;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

std::string cell_text(const std::optional<CellId>& id) {
    return id ? std::to_string(id->row) + ":" + std::to_string(id->col) : std::string("-");
}

ordered_json cell_json(CellId id) { return ordered_json::array({id.row, id.col}); }

class Fnv1a {
public:
    void bytes(const unsigned char* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    void i32(std::int32_t v) {
        const auto u = static_cast<std::uint32_t>(v);
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
        bytes(b, 4);
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

ProbabilityMap hop_probability_map(std::span<const TrialRecord> records) {
    if (records.empty()) throw ValidationError("hop_probability_map: no trial records");
    ProbabilityMap map;
    map.trials = static_cast<int>(records.size());
    for (const auto& rec : records) {
        for (std::size_t r = 0; r < rec.occupancy.size(); ++r) {
            const auto start = rec.start_cell(r);
            if (!start) continue;
            HopDirection dir = HopDirection::Stay;
            for (const auto& hop : rec.hops) {
                if (hop.robot == static_cast<int>(r)) {
                    dir = direction_between(hop.from, hop.to);
                    break;
                }
            }
            auto& dist = map.cells[*start];
            ++dist.trials;
            ++dist.count[static_cast<std::size_t>(dir)];
        }
    }
    for (auto& [cell, dist] : map.cells) {
        for (std::size_t i = 0; i < kHopDirections; ++i) {
            dist.probability[i] = static_cast<double>(dist.count[i]) / dist.trials;
        }
    }
    return map;
}

Heatmap occupancy_heatmap(std::span<const TrialRecord> records) {
    if (records.empty()) throw ValidationError("occupancy_heatmap: no trial records");
    Heatmap h;
    h.rows = records.front().rows;
    h.cols = records.front().cols;
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(h.rows * h.cols), 0);
    for (const auto& rec : records) {
        if (rec.rows != h.rows || rec.cols != h.cols) {
            throw ValidationError("occupancy_heatmap: records from different grid sizes");
        }
        for (const auto& row : rec.occupancy) {
            for (int flat : row) {
                if (flat < 0) continue;
                ++counts[static_cast<std::size_t>(flat)];
                ++h.samples;
            }
        }
    }
    h.fraction.assign(counts.size(), 0.0);
    if (h.samples > 0) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            h.fraction[i] = static_cast<double>(counts[i]) / static_cast<double>(h.samples);
        }
    }
    return h;
}

std::string trace_hash(const TrialRecord& record) {
    Fnv1a h;
    h.i32(record.rows);
    h.i32(record.cols);
    h.u64(record.occupancy.size());
    for (const auto& row : record.occupancy) {
        h.u64(row.size());
        for (int v : row) h.i32(v);
    }
    h.u64(record.hops.size());
    for (const auto& e : record.hops) {
        h.i32(e.robot);
        h.i32(e.from.row);
        h.i32(e.from.col);
        h.i32(e.to.row);
        h.i32(e.to.col);
        h.u64(e.start_tick);
        h.u64(e.end_tick);
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = h.value();
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string probmap_json(const ProbabilityMap& map) {
    ordered_json j;
    j["schema"] = kReportSchema;
    j["trials"] = map.trials;
    ordered_json cells = ordered_json::array();
    for (const auto& [cell, dist] : map.cells) {
        ordered_json c;
        c["cell"] = cell_json(cell);
        c["trials"] = dist.trials;
        ordered_json p;
        for (std::size_t i = 0; i < kHopDirections; ++i) {
            p[to_string(static_cast<HopDirection>(i))] = dist.probability[i];
        }
        c["probability"] = p;
        cells.push_back(c);
    }
    j["cells"] = cells;
    return j.dump(2) + "\n";
}

std::string report_json(const ExperimentReport& report) {
    ordered_json j;
    j["schema"] = kReportSchema;
    j["scenario"] = report.name;
    j["figure"] = report.figure;
    j["predicate"] = report.predicate;
    j["seed"] = report.seed;
    j["noise"] = {{"sigma_rot", report.noise.sigma_rot},
                  {"sigma_drive", report.noise.sigma_drive},
                  {"duty_mismatch", report.noise.duty_mismatch}};
    j["trials"] = report.records.size();
    j["successes"] = report.successes;
    j["success_rate"] = report.success_rate;
    ordered_json starts = ordered_json::array();
    for (const auto& [cell, stats] : report.per_start) {
        starts.push_back({{"cell", cell_json(cell)},
                          {"trials", stats.trials},
                          {"successes", stats.successes},
                          {"rate", stats.rate()}});
    }
    j["per_start"] = starts;
    j["robot_ticks"] = report.total_robot_ticks;
    j["safe_robot_ticks"] = report.safe_robot_ticks;
    j["safe_fraction"] = report.safe_fraction;
    ordered_json trials = ordered_json::array();
    for (const auto& rec : report.records) {
        trials.push_back({{"index", rec.index},
                          {"seed", rec.seed},
                          {"success", rec.success},
                          {"hops", rec.hops.size()},
                          {"trace", trace_hash(rec)}});
    }
    j["trial_summaries"] = trials;
    j["files"] = {{"trials.csv", "gengrid-trials/1"},
                  {"probmap.json", "gengrid-probmap/1"},
                  {"heatmap.csv", "gengrid-heatmap/1"}};
    return j.dump(2) + "\n";
}

std::string trials_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "index,seed,success,final_cell,hops,wall_ticks\n";
    for (const auto& rec : report.records) {
        std::string finals;
        for (std::size_t r = 0; r < rec.occupancy.size(); ++r) {
            if (r) finals += '|';
            finals += cell_text(rec.final_cell(r));
        }
        out << rec.index << ',' << rec.seed << ',' << (rec.success ? 1 : 0) << ',' << finals << ','
            << rec.hops.size() << ',' << rec.wall_ticks << '\n';
    }
    return out.str();
}

std::string heatmap_csv(const Heatmap& heatmap) {
    std::ostringstream out;
    out << "row,col,fraction\n";
    for (int r = 0; r < heatmap.rows; ++r) {
        for (int c = 0; c < heatmap.cols; ++c) {
            out << r << ',' << c << ',' << format_double(heatmap.at({r, c})) << '\n';
        }
    }
    return out.str();
}

std::vector<std::filesystem::path> export_report(const ExperimentReport& report,
                                                 const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir.string() + "'" +
                      (ec ? ": " + ec.message() : std::string()));
    }
    std::vector<std::filesystem::path> written;
    auto emit = [&](const char* name, const std::string& content) {
        const auto path = dir / name;
        write_file(path, content);
        written.push_back(path);
    };
    emit("report.json", report_json(report));
    emit("trials.csv", trials_csv(report));
    emit("probmap.json", probmap_json(report.probability_map));
    emit("heatmap.csv", heatmap_csv(report.heatmap));
    return written;
}

std::vector<TrialRow> parse_trials_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "index,seed,success,final_cell,hops,wall_ticks") {
        throw ParseError("trials.csv: unexpected header", 1, 1);
    }
    std::vector<TrialRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        if (fields.size() != 6) throw ParseError("trials.csv: expected 6 fields", lineno, 1);
        try {
            TrialRow row;
            row.index = std::stoi(fields[0]);
            row.seed = std::stoull(fields[1]);
            row.success = fields[2] == "1";
            std::stringstream cs(fields[3]);
            std::string cell;
            while (std::getline(cs, cell, '|')) {
                if (cell == "-") {
                    row.final_cells.emplace_back(std::nullopt);
                    continue;
                }
                const auto colon = cell.find(':');
                if (colon == std::string::npos) throw ParseError("trials.csv: bad cell", lineno, 4);
                row.final_cells.emplace_back(
                    CellId{std::stoi(cell.substr(0, colon)), std::stoi(cell.substr(colon + 1))});
            }
            row.hops = std::stoi(fields[4]);
            row.wall_ticks = std::stoull(fields[5]);
            rows.push_back(std::move(row));
        } catch (const std::logic_error&) {
            throw ParseError("trials.csv: malformed number", lineno, 1);
        }
    }
    return rows;
}

}  // namespace gengrid::telemetry
