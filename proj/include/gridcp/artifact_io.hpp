#pragma once

#include <filesystem>

#include "json.hpp"

#include "gridcp/conformal.hpp"
#include "gridcp/quantiles.hpp"

namespace gridcp::io {

// Each artifact is a directory: one CGF1 file per grid plus a JSON index
// keyed by level_key(level).

/// index.json: {"levels": {level: filename}, "warnings": [...]}
void write_quantile_set(const std::filesystem::path& dir, const QuantileGridSet& q);
QuantileGridSet read_quantile_set(const std::filesystem::path& dir);

/// manifest.json: {"levels": {level: {"lower", "upper", "unbounded_flag"}}, "method", "calibration_size"}
void write_offsets(const std::filesystem::path& dir, const ConformalOffsets& off,
                   const nlohmann::json& provenance = nlohmann::json::object());
ConformalOffsets read_offsets(const std::filesystem::path& dir);

/// index.json: {"levels": {level: {"lower", "upper"}}, "provenance", "collapsed_count"}
void write_intervals(const std::filesystem::path& dir, const IntervalGridSet& iv);
IntervalGridSet read_intervals(const std::filesystem::path& dir);

/// Writes `doc` as indented JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace gridcp::io
