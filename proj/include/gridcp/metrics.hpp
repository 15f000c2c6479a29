#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gridcp/conformal.hpp"
#include "gridcp/grid.hpp"
#include "gridcp/quantiles.hpp"

namespace gridcp {

/// Winkler score of [lower, upper] for outcome x at miscoverage alpha.
double interval_score(double lower, double upper, double x, double alpha);

/// Pinball loss of quantile forecast q at level gamma for outcome x.
double quantile_score(double q, double x, double gamma);

struct PicpResult {
    std::vector<double> grid;  // NaN at invalid points
    double mean = 0.0;
};

/// Fraction of records with lower <= truth <= upper, per point, then averaged over valid points.
PicpResult picp(std::span<const IntervalGridSet> intervals, std::span<const GridField> truths, double coverage);

struct LevelMetrics {
    double coverage = 0.0;
    std::vector<double> picp_grid;
    std::vector<double> below_grid;  // truth < lower
    std::vector<double> above_grid;  // truth > upper
    std::vector<double> is_grid;
    std::vector<double> iw_grid;
    double mean_picp = 0.0;
    double mean_below = 0.0;
    double mean_above = 0.0;
    /// 100 * (PICP - nominal) / nominal.
    double pct_deviation = 0.0;
    double mean_is = 0.0;
    double mean_iw = 0.0;
    /// Record-point pairs left out of IS/IW because the interval was unbounded.
    std::size_t unbounded_excluded = 0;
};

struct QuantileMetrics {
    double gamma = 0.0;
    std::vector<double> qs_grid;
    double mean_qs = 0.0;
    std::size_t unbounded_excluded = 0;
};

struct MetricReport {
    GridLayout layout;
    Provenance provenance = Provenance::raw_quantile;
    std::vector<LevelMetrics> levels;
    std::vector<QuantileMetrics> quantiles;
    std::size_t test_records = 0;
    std::size_t valid_points = 0;
    std::size_t collapsed_intervals = 0;

    const LevelMetrics& level(double coverage) const;
    const QuantileMetrics& quantile(double gamma) const;
};

/**
 * Grid-wise coverage, interval and quantile scores averaged over test records per point, then
 * over valid points.
 *
 * A quantile level gamma is scored on the interval bound it defines (lower
 * bound of coverage 1-2*gamma, upper bound of coverage 2*gamma-1), so
 * calibrated sets are scored on their corrected quantiles. Levels with no
 * matching bound fall back to `quantile_sets`, which may be empty otherwise.
 */
MetricReport evaluate(std::span<const IntervalGridSet> intervals, std::span<const QuantileGridSet> quantile_sets,
                      std::span<const GridField> truths, const LevelScheme& scheme, std::size_t jobs = 1);

}  // namespace gridcp
