#include "gridcp/artifact_io.hpp"

#include <algorithm>
#include <fstream>
#include <string>
#include <utility>

#include "gridcp/grid_io.hpp"

namespace gridcp::io {

namespace fs = std::filesystem;
using nlohmann::json;

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

namespace {

double parse_level(const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(key, &used);
        if (used == key.size()) return v;
    } catch (const std::exception&) {
    }
    throw DataError("bad level key '" + key + "'");
}

// Level entries sorted by numeric level.
std::vector<std::pair<double, json>> sorted_levels(const json& levels) {
    std::vector<std::pair<double, json>> out;
    for (const auto& [key, value] : levels.items()) out.emplace_back(parse_level(key), value);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

std::vector<double> read_grid(const fs::path& path, GridLayout& layout, bool first) {
    GridField f = read_cgf(path);
    if (first) {
        layout = f.layout();
    } else if (!(f.layout() == layout)) {
        throw DataError(path.string() + ": layout differs from sibling grids");
    }
    return {f.values().begin(), f.values().end()};
}

std::string json_string(const json& doc, const char* key, const fs::path& where) {
    if (!doc.contains(key) || !doc.at(key).is_string()) {
        throw DataError(where.string() + ": missing '" + key + "'");
    }
    return doc.at(key).get<std::string>();
}

}  // namespace

void write_quantile_set(const fs::path& dir, const QuantileGridSet& q) {
    fs::create_directories(dir);
    json levels = json::object();
    for (std::size_t l = 0; l < q.levels.size(); ++l) {
        const std::string key = level_key(q.levels[l]);
        const std::string file = "q_" + key + ".cgf";
        write_cgf(dir / file, GridField(q.layout, q.grids[l]));
        levels[key] = file;
    }
    write_json(dir / "index.json", json{{"format", "gridcp-quantiles"}, {"levels", levels}, {"warnings", q.warnings}});
}

QuantileGridSet read_quantile_set(const fs::path& dir) {
    const json index = read_json(dir / "index.json");
    if (!index.contains("levels")) throw DataError((dir / "index.json").string() + ": missing 'levels'");
    QuantileGridSet q;
    bool first = true;
    for (const auto& [level, entry] : sorted_levels(index.at("levels"))) {
        q.levels.push_back(level);
        q.grids.push_back(read_grid(dir / entry.get<std::string>(), q.layout, first));
        first = false;
    }
    if (index.contains("warnings")) q.warnings = index.at("warnings").get<std::vector<std::string>>();
    return q;
}

void write_offsets(const fs::path& dir, const ConformalOffsets& off, const json& provenance) {
    fs::create_directories(dir);
    json levels = json::object();
    for (std::size_t l = 0; l < off.coverage_levels.size(); ++l) {
        const std::string key = level_key(off.coverage_levels[l]);
        const std::string lower = "lower_" + key + ".cgf";
        const std::string upper = "upper_" + key + ".cgf";
        write_cgf(dir / lower, GridField(off.layout, off.lower[l]));
        write_cgf(dir / upper, GridField(off.layout, off.upper[l]));
        levels[key] = json{{"lower", lower}, {"upper", upper}, {"unbounded_flag", static_cast<bool>(off.unbounded[l])}};
    }
    write_json(dir / "manifest.json", json{{"format", "gridcp-offsets"},
                                           {"method", to_string(off.method)},
                                           {"calibration_size", off.calibration_size},
                                           {"levels", levels},
                                           {"provenance", provenance}});
}

ConformalOffsets read_offsets(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    const json manifest = read_json(manifest_path);
    ConformalOffsets off;
    off.method = provenance_from_string(json_string(manifest, "method", manifest_path));
    off.calibration_size = manifest.value("calibration_size", std::size_t{0});
    bool first = true;
    for (const auto& [level, entry] : sorted_levels(manifest.at("levels"))) {
        off.coverage_levels.push_back(level);
        off.lower.push_back(read_grid(dir / json_string(entry, "lower", manifest_path), off.layout, first));
        first = false;
        off.upper.push_back(read_grid(dir / json_string(entry, "upper", manifest_path), off.layout, false));
        off.unbounded.push_back(entry.value("unbounded_flag", false));
    }
    return off;
}

void write_intervals(const fs::path& dir, const IntervalGridSet& iv) {
    fs::create_directories(dir);
    json levels = json::object();
    for (std::size_t l = 0; l < iv.coverage_levels.size(); ++l) {
        const std::string key = level_key(iv.coverage_levels[l]);
        const std::string lower = "L_" + key + ".cgf";
        const std::string upper = "U_" + key + ".cgf";
        write_cgf(dir / lower, GridField(iv.layout, iv.lower[l]));
        write_cgf(dir / upper, GridField(iv.layout, iv.upper[l]));
        levels[key] = json{{"lower", lower}, {"upper", upper}};
    }
    write_json(dir / "index.json", json{{"format", "gridcp-intervals"},
                                        {"provenance", to_string(iv.provenance)},
                                        {"collapsed_count", iv.collapsed_count},
                                        {"levels", levels}});
}

IntervalGridSet read_intervals(const fs::path& dir) {
    const fs::path index_path = dir / "index.json";
    const json index = read_json(index_path);
    IntervalGridSet iv;
    iv.provenance = provenance_from_string(json_string(index, "provenance", index_path));
    iv.collapsed_count = index.value("collapsed_count", std::size_t{0});
    bool first = true;
    for (const auto& [level, entry] : sorted_levels(index.at("levels"))) {
        iv.coverage_levels.push_back(level);
        iv.lower.push_back(read_grid(dir / json_string(entry, "lower", index_path), iv.layout, first));
        first = false;
        iv.upper.push_back(read_grid(dir / json_string(entry, "upper", index_path), iv.layout, false));
    }
    return iv;
}

}  // namespace gridcp::io
