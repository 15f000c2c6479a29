#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gridcp/grid.hpp"
#include "gridcp/quantiles.hpp"

namespace gridcp {

enum class Provenance { raw_quantile, split_cp, cqr };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& text);

/// k = ceil((n+1) * beta). A result above n means no finite correction exists.
std::size_t conformal_rank(std::size_t n, double beta);

/**
 * Per-grid-point calibration scores, each point's list sorted nondecreasing.
 * Storage is point-major: scores of point p occupy [p*n, (p+1)*n).
 */
class ConformityScoreGrid {
public:
    enum class Side { symmetric, lower, upper };

    ConformityScoreGrid(GridLayout layout, std::size_t n, Side side, std::vector<double> point_major_scores,
                        std::size_t jobs = 1);

    const GridLayout& layout() const { return layout_; }
    std::size_t calibration_size() const { return n_; }
    Side side() const { return side_; }
    std::span<const double> scores(std::size_t point) const {
        return std::span<const double>(scores_).subspan(point * n_, n_);
    }

    /// Score of rank k (1-based) at every valid point; +inf everywhere if k > n.
    std::vector<double> order_statistic(std::size_t k) const;

private:
    GridLayout layout_;
    std::size_t n_;
    Side side_;
    std::vector<double> scores_;
};

/**
 * Additive corrections per coverage level. Interval bounds become
 * [q_lo - lower, q_hi + upper] (or prediction -/+ offset for split CP).
 */
struct ConformalOffsets {
    GridLayout layout;
    Provenance method = Provenance::cqr;
    std::size_t calibration_size = 0;
    std::vector<double> coverage_levels;
    std::vector<std::vector<double>> lower;
    std::vector<std::vector<double>> upper;
    /// True where the required rank exceeds n; offsets are then +inf.
    std::vector<bool> unbounded;

    std::size_t level_index(double coverage) const;
};

struct IntervalGridSet {
    GridLayout layout;
    Provenance provenance = Provenance::raw_quantile;
    std::vector<double> coverage_levels;
    std::vector<std::vector<double>> lower;
    std::vector<std::vector<double>> upper;
    /// Point-level pairs whose corrected bounds crossed and were collapsed.
    std::size_t collapsed_count = 0;

    std::size_t level_index(double coverage) const;
    /// Valid (point, adjacent level pair) cases where a narrower interval pokes out of a wider one.
    std::size_t nesting_violations() const;
};

/// Symmetric absolute-residual scores |truth - prediction|, one offset per level.
ConformalOffsets calibrate_split_cp(std::span<const GridField> predictions, std::span<const GridField> truths,
                                    const LevelScheme& scheme, std::size_t jobs = 1);

/// Asymmetric CQR: each tail calibrated independently at rank conformal_rank(n, 1 - alpha/2).
ConformalOffsets calibrate_cqr(std::span<const QuantileGridSet> quantile_sets, std::span<const GridField> truths,
                               const LevelScheme& scheme, std::size_t jobs = 1);

IntervalGridSet apply_offsets(const QuantileGridSet& q, const ConformalOffsets& off, const LevelScheme& scheme);

IntervalGridSet apply_split_cp(const GridField& prediction, const ConformalOffsets& off, const LevelScheme& scheme);

/// Uncalibrated baseline: [q_{alpha/2}, q_{1-alpha/2}].
IntervalGridSet raw_intervals(const QuantileGridSet& q, const LevelScheme& scheme);

}  // namespace gridcp
