#include "gridcp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gridcp/parallel.hpp"

namespace gridcp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t find_coverage_index(const std::vector<double>& levels, double coverage, const char* owner) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (same_level(levels[i], coverage)) return i;
    }
    std::ostringstream os;
    os << owner << " has no coverage level " << coverage;
    throw DataError(os.str());
}

void require_aligned(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DataError(std::string("misaligned calibration inputs: ") + what);
    if (a == 0) throw DataError("calibration set is empty");
}

}  // namespace

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::raw_quantile: return "raw";
        case Provenance::split_cp: return "split-cp";
        case Provenance::cqr: return "cqr";
    }
    return "unknown";
}

Provenance provenance_from_string(const std::string& text) {
    if (text == "raw" || text == "raw-quantile") return Provenance::raw_quantile;
    if (text == "split-cp") return Provenance::split_cp;
    if (text == "cqr") return Provenance::cqr;
    throw std::invalid_argument("unknown method '" + text + "' (expected raw, split-cp or cqr)");
}

std::size_t conformal_rank(std::size_t n, double beta) {
    if (n == 0) throw std::invalid_argument("calibration size must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("rank level must lie in (0,1)");
    const double x = static_cast<double>(n + 1) * beta;
    // Products such as 100 * 0.9 may carry rounding above the integer.
    return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

ConformityScoreGrid::ConformityScoreGrid(GridLayout layout, std::size_t n, Side side,
                                         std::vector<double> point_major_scores, std::size_t jobs)
    : layout_(std::move(layout)), n_(n), side_(side), scores_(std::move(point_major_scores)) {
    if (scores_.size() != layout_.size() * n_) throw DataError("score grid size mismatch");
    parallel_for(layout_.size(), jobs, [&](std::size_t p) {
        if (!layout_.valid(p)) return;
        auto first = scores_.begin() + static_cast<std::ptrdiff_t>(p * n_);
        std::sort(first, first + static_cast<std::ptrdiff_t>(n_));
    });
}

std::vector<double> ConformityScoreGrid::order_statistic(std::size_t k) const {
    std::vector<double> out(layout_.size(), kNaN);
    for (std::size_t p = 0; p < layout_.size(); ++p) {
        if (!layout_.valid(p)) continue;
        out[p] = (k == 0 || k > n_) ? kInf : scores_[p * n_ + k - 1];
    }
    return out;
}

std::size_t ConformalOffsets::level_index(double coverage) const {
    return find_coverage_index(coverage_levels, coverage, "offsets");
}

std::size_t IntervalGridSet::level_index(double coverage) const {
    return find_coverage_index(coverage_levels, coverage, "interval set");
}

std::size_t IntervalGridSet::nesting_violations() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < coverage_levels.size(); ++l) {
        for (std::size_t p = 0; p < layout.size(); ++p) {
            if (!layout.valid(p)) continue;
            if (lower[l + 1][p] > lower[l][p] || upper[l + 1][p] < upper[l][p]) ++count;
        }
    }
    return count;
}

ConformalOffsets calibrate_split_cp(std::span<const GridField> predictions, std::span<const GridField> truths,
                                    const LevelScheme& scheme, std::size_t jobs) {
    require_aligned(predictions.size(), truths.size(), "prediction/truth counts differ");
    const std::size_t n = truths.size();
    const GridLayout& layout = truths.front().layout();
    for (std::size_t c = 0; c < n; ++c) {
        if (!(truths[c].layout() == layout) || !(predictions[c].layout() == layout)) {
            throw DataError("misaligned calibration inputs: record " + std::to_string(c) + " layout differs");
        }
    }

    std::vector<double> scores(layout.size() * n, kNaN);
    for (std::size_t p = 0; p < layout.size(); ++p) {
        if (!layout.valid(p)) continue;
        for (std::size_t c = 0; c < n; ++c) scores[p * n + c] = std::abs(truths[c][p] - predictions[c][p]);
    }
    const ConformityScoreGrid grid(layout, n, ConformityScoreGrid::Side::symmetric, std::move(scores), jobs);

    ConformalOffsets off;
    off.layout = layout;
    off.method = Provenance::split_cp;
    off.calibration_size = n;
    off.coverage_levels = scheme.coverage_levels();
    for (double level : scheme.coverage_levels()) {
        const std::size_t k = conformal_rank(n, level);
        auto offset = grid.order_statistic(k);
        off.lower.push_back(offset);
        off.upper.push_back(std::move(offset));
        off.unbounded.push_back(k > n);
    }
    return off;
}

ConformalOffsets calibrate_cqr(std::span<const QuantileGridSet> quantile_sets, std::span<const GridField> truths,
                               const LevelScheme& scheme, std::size_t jobs) {
    require_aligned(quantile_sets.size(), truths.size(), "quantile/truth counts differ");
    const std::size_t n = truths.size();
    const GridLayout& layout = truths.front().layout();
    for (std::size_t c = 0; c < n; ++c) {
        if (!(truths[c].layout() == layout) || !(quantile_sets[c].layout == layout)) {
            throw DataError("misaligned calibration inputs: record " + std::to_string(c) + " layout differs");
        }
    }

    ConformalOffsets off;
    off.layout = layout;
    off.method = Provenance::cqr;
    off.calibration_size = n;
    off.coverage_levels = scheme.coverage_levels();

    for (double level : scheme.coverage_levels()) {
        auto [lo_gamma, hi_gamma] = tail_levels(level);
        std::vector<std::size_t> lo_idx(n), hi_idx(n);
        for (std::size_t c = 0; c < n; ++c) {
            lo_idx[c] = quantile_sets[c].level_index(lo_gamma);
            hi_idx[c] = quantile_sets[c].level_index(hi_gamma);
        }

        std::vector<double> lo_scores(layout.size() * n, kNaN);
        std::vector<double> hi_scores(layout.size() * n, kNaN);
        for (std::size_t c = 0; c < n; ++c) {
            const auto& q_lo = quantile_sets[c].grids[lo_idx[c]];
            const auto& q_hi = quantile_sets[c].grids[hi_idx[c]];
            for (std::size_t p = 0; p < layout.size(); ++p) {
                if (!layout.valid(p)) continue;
                lo_scores[p * n + c] = q_lo[p] - truths[c][p];
                hi_scores[p * n + c] = truths[c][p] - q_hi[p];
            }
        }
        const ConformityScoreGrid lo_grid(layout, n, ConformityScoreGrid::Side::lower, std::move(lo_scores), jobs);
        const ConformityScoreGrid hi_grid(layout, n, ConformityScoreGrid::Side::upper, std::move(hi_scores), jobs);

        const auto [lo_q, hi_q] = scheme.tail_indices(level);
        (void)lo_q;
        const std::size_t k = conformal_rank(n, scheme.quantile_levels()[hi_q]);
        off.lower.push_back(lo_grid.order_statistic(k));
        off.upper.push_back(hi_grid.order_statistic(k));
        off.unbounded.push_back(k > n);
    }
    return off;
}

namespace {

IntervalGridSet build_intervals(const GridLayout& layout, Provenance provenance, const LevelScheme& scheme,
                                const auto& bounds_for_level) {
    IntervalGridSet out;
    out.layout = layout;
    out.provenance = provenance;
    out.coverage_levels = scheme.coverage_levels();
    for (double level : scheme.coverage_levels()) {
        std::vector<double> lo(layout.size(), kNaN);
        std::vector<double> hi(layout.size(), kNaN);
        bounds_for_level(level, lo, hi);
        for (std::size_t p = 0; p < layout.size(); ++p) {
            if (!layout.valid(p)) continue;
            if (lo[p] > hi[p]) {
                const double mid = 0.5 * (lo[p] + hi[p]);
                lo[p] = mid;
                hi[p] = mid;
                ++out.collapsed_count;
            }
        }
        out.lower.push_back(std::move(lo));
        out.upper.push_back(std::move(hi));
    }
    return out;
}

}  // namespace

IntervalGridSet apply_offsets(const QuantileGridSet& q, const ConformalOffsets& off, const LevelScheme& scheme) {
    if (!q.layout.same_dims(off.layout) || q.layout.mask() != off.layout.mask()) {
        throw DataError("quantile set and offsets differ in dimensions or mask");
    }
    return build_intervals(q.layout, off.method, scheme, [&](double level, auto& lo, auto& hi) {
        auto [lo_gamma, hi_gamma] = tail_levels(level);
        const auto& q_lo = q.grid(lo_gamma);
        const auto& q_hi = q.grid(hi_gamma);
        const std::size_t l = off.level_index(level);
        for (std::size_t p = 0; p < q.layout.size(); ++p) {
            if (!q.layout.valid(p)) continue;
            lo[p] = q_lo[p] - off.lower[l][p];
            hi[p] = q_hi[p] + off.upper[l][p];
        }
    });
}

IntervalGridSet apply_split_cp(const GridField& prediction, const ConformalOffsets& off, const LevelScheme& scheme) {
    if (!prediction.layout().same_dims(off.layout) || prediction.layout().mask() != off.layout.mask()) {
        throw DataError("prediction and offsets differ in dimensions or mask");
    }
    return build_intervals(prediction.layout(), Provenance::split_cp, scheme, [&](double level, auto& lo, auto& hi) {
        const std::size_t l = off.level_index(level);
        for (std::size_t p = 0; p < prediction.size(); ++p) {
            if (!prediction.valid(p)) continue;
            lo[p] = prediction[p] - off.lower[l][p];
            hi[p] = prediction[p] + off.upper[l][p];
        }
    });
}

IntervalGridSet raw_intervals(const QuantileGridSet& q, const LevelScheme& scheme) {
    return build_intervals(q.layout, Provenance::raw_quantile, scheme, [&](double level, auto& lo, auto& hi) {
        auto [lo_gamma, hi_gamma] = tail_levels(level);
        const auto& q_lo = q.grid(lo_gamma);
        const auto& q_hi = q.grid(hi_gamma);
        for (std::size_t p = 0; p < q.layout.size(); ++p) {
            if (!q.layout.valid(p)) continue;
            lo[p] = q_lo[p];
            hi[p] = q_hi[p];
        }
    });
}

}  // namespace gridcp
