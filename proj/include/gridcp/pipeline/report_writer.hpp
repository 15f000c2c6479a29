#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridcp/metrics.hpp"

namespace gridcp::pipeline {

nlohmann::json report_summary(const MetricReport& report);

/**
 * Writes one method's report:
 *   interval_scores.csv  IS and IW rows by coverage level
 *   quantile_scores.csv  QS row by quantile level
 *   picp.csv             PICP, % deviation and per-tail miss rates by level
 *   maps/picp_<level>.cgf, maps/iw_<level>.cgf
 *   summary.json, picp.svg, deviation.svg
 */
void write_report(const std::filesystem::path& dir, const MetricReport& report, const nlohmann::json& config_echo);

/// Cross-method tables and charts from summary.json documents (rows: method).
void write_comparison(const std::filesystem::path& dir, const std::vector<nlohmann::json>& summaries);

struct ChartSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

enum class ReferenceLine { none, identity, zero };

/// Minimal static line chart with axes, ticks and an optional reference line.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series, ReferenceLine reference);

/// Fixed six-decimal formatting used in every CSV table.
std::string format_cell(double v);

}  // namespace gridcp::pipeline
