#include "gridcp/metrics.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "gridcp/parallel.hpp"

namespace gridcp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Mean over finite entries at valid points, in index order.
double spatial_mean(const GridLayout& layout, const std::vector<double>& grid) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < layout.size(); ++p) {
        if (!layout.valid(p) || !std::isfinite(grid[p])) continue;
        sum += grid[p];
        ++count;
    }
    return count ? sum / static_cast<double>(count) : kNaN;
}

void require_records(std::size_t intervals, std::size_t truths) {
    if (truths == 0) throw DataError("no test records");
    if (intervals != truths) throw DataError("interval and truth record counts differ");
}

// Where a quantile level's forecast comes from when scoring.
struct QuantileSource {
    enum class Kind { lower_bound, upper_bound, quantile_set } kind;
    std::size_t index;
};

}  // namespace

double interval_score(double lower, double upper, double x, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (lower > upper) throw std::invalid_argument("interval lower bound exceeds upper bound");
    const double width = upper - lower;
    if (x < lower) return width + (2.0 / alpha) * (lower - x);
    if (x > upper) return width + (2.0 / alpha) * (x - upper);
    return width;
}

double quantile_score(double q, double x, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
    return x > q ? (x - q) * gamma : (q - x) * (1.0 - gamma);
}

PicpResult picp(std::span<const IntervalGridSet> intervals, std::span<const GridField> truths, double coverage) {
    require_records(intervals.size(), truths.size());
    const GridLayout& layout = truths.front().layout();
    PicpResult out;
    out.grid.assign(layout.size(), kNaN);
    std::vector<std::size_t> level_idx(intervals.size());
    for (std::size_t r = 0; r < intervals.size(); ++r) {
        if (!intervals[r].layout.same_dims(layout)) throw DataError("interval/truth dimension mismatch");
        level_idx[r] = intervals[r].level_index(coverage);
    }
    for (std::size_t p = 0; p < layout.size(); ++p) {
        if (!layout.valid(p)) continue;
        std::size_t hits = 0;
        for (std::size_t r = 0; r < intervals.size(); ++r) {
            const double x = truths[r][p];
            if (intervals[r].lower[level_idx[r]][p] <= x && x <= intervals[r].upper[level_idx[r]][p]) ++hits;
        }
        out.grid[p] = static_cast<double>(hits) / static_cast<double>(intervals.size());
    }
    out.mean = spatial_mean(layout, out.grid);
    return out;
}

const LevelMetrics& MetricReport::level(double coverage) const {
    for (const auto& l : levels) {
        if (same_level(l.coverage, coverage)) return l;
    }
    throw DataError("report has no coverage level");
}

const QuantileMetrics& MetricReport::quantile(double gamma) const {
    for (const auto& q : quantiles) {
        if (same_level(q.gamma, gamma)) return q;
    }
    throw DataError("report has no quantile level");
}

MetricReport evaluate(std::span<const IntervalGridSet> intervals, std::span<const QuantileGridSet> quantile_sets,
                      std::span<const GridField> truths, const LevelScheme& scheme, std::size_t jobs) {
    require_records(intervals.size(), truths.size());
    const std::size_t n_rec = truths.size();
    const GridLayout& layout = truths.front().layout();
    for (std::size_t r = 0; r < n_rec; ++r) {
        if (!(truths[r].layout() == layout) || !intervals[r].layout.same_dims(layout)) {
            throw DataError("test record " + std::to_string(r) + " layout differs");
        }
        for (double c : scheme.coverage_levels()) (void)intervals[r].level_index(c);
    }
    if (!quantile_sets.empty() && quantile_sets.size() != n_rec) {
        throw DataError("quantile set and truth record counts differ");
    }

    const auto& coverages = scheme.coverage_levels();
    const auto& gammas = scheme.quantile_levels();

    std::vector<QuantileSource> sources;
    for (double g : gammas) {
        std::optional<QuantileSource> src;
        for (std::size_t c = 0; c < coverages.size() && !src; ++c) {
            auto [lo, hi] = tail_levels(coverages[c]);
            if (same_level(lo, g)) src = QuantileSource{QuantileSource::Kind::lower_bound, c};
            else if (same_level(hi, g)) src = QuantileSource{QuantileSource::Kind::upper_bound, c};
        }
        if (!src) {
            if (quantile_sets.empty()) {
                std::ostringstream os;
                os << "no interval bound or quantile grid for level " << g;
                throw DataError(os.str());
            }
            src = QuantileSource{QuantileSource::Kind::quantile_set, quantile_sets.front().level_index(g)};
        }
        sources.push_back(*src);
    }

    MetricReport report;
    report.layout = layout;
    report.provenance = intervals.front().provenance;
    report.test_records = n_rec;
    report.valid_points = layout.valid_count();
    for (const auto& iv : intervals) report.collapsed_intervals += iv.collapsed_count;

    const std::size_t n_lv = coverages.size();
    const std::size_t n_q = gammas.size();
    report.levels.resize(n_lv);
    for (std::size_t l = 0; l < n_lv; ++l) {
        auto& m = report.levels[l];
        m.coverage = coverages[l];
        for (auto* g : {&m.picp_grid, &m.below_grid, &m.above_grid, &m.is_grid, &m.iw_grid}) {
            g->assign(layout.size(), kNaN);
        }
    }
    report.quantiles.resize(n_q);
    for (std::size_t q = 0; q < n_q; ++q) {
        report.quantiles[q].gamma = gammas[q];
        report.quantiles[q].qs_grid.assign(layout.size(), kNaN);
    }

    // Level index of each coverage level inside each record's interval set.
    std::vector<std::vector<std::size_t>> rec_level(n_rec, std::vector<std::size_t>(n_lv));
    for (std::size_t r = 0; r < n_rec; ++r) {
        for (std::size_t l = 0; l < n_lv; ++l) rec_level[r][l] = intervals[r].level_index(coverages[l]);
    }

    std::vector<std::size_t> level_excluded(layout.size() * n_lv, 0);
    std::vector<std::size_t> quantile_excluded(layout.size() * n_q, 0);

    parallel_for(layout.size(), jobs, [&](std::size_t p) {
        if (!layout.valid(p)) return;
        for (std::size_t l = 0; l < n_lv; ++l) {
            const double alpha = 1.0 - coverages[l];
            std::size_t inside = 0, below = 0, above = 0, scored = 0;
            double is_sum = 0.0, iw_sum = 0.0;
            for (std::size_t r = 0; r < n_rec; ++r) {
                const std::size_t li = rec_level[r][l];
                const double lo = intervals[r].lower[li][p];
                const double hi = intervals[r].upper[li][p];
                const double x = truths[r][p];
                if (x < lo) ++below;
                else if (x > hi) ++above;
                else ++inside;
                if (std::isfinite(lo) && std::isfinite(hi)) {
                    is_sum += interval_score(lo, hi, x, alpha);
                    iw_sum += hi - lo;
                    ++scored;
                }
            }
            auto& m = report.levels[l];
            const double nr = static_cast<double>(n_rec);
            m.picp_grid[p] = static_cast<double>(inside) / nr;
            m.below_grid[p] = static_cast<double>(below) / nr;
            m.above_grid[p] = static_cast<double>(above) / nr;
            if (scored) {
                m.is_grid[p] = is_sum / static_cast<double>(scored);
                m.iw_grid[p] = iw_sum / static_cast<double>(scored);
            }
            level_excluded[p * n_lv + l] = n_rec - scored;
        }
        for (std::size_t q = 0; q < n_q; ++q) {
            double qs_sum = 0.0;
            std::size_t scored = 0;
            for (std::size_t r = 0; r < n_rec; ++r) {
                const auto& src = sources[q];
                double forecast = kNaN;
                switch (src.kind) {
                    case QuantileSource::Kind::lower_bound:
                        forecast = intervals[r].lower[rec_level[r][src.index]][p];
                        break;
                    case QuantileSource::Kind::upper_bound:
                        forecast = intervals[r].upper[rec_level[r][src.index]][p];
                        break;
                    case QuantileSource::Kind::quantile_set:
                        forecast = quantile_sets[r].grids[src.index][p];
                        break;
                }
                if (!std::isfinite(forecast)) continue;
                qs_sum += quantile_score(forecast, truths[r][p], gammas[q]);
                ++scored;
            }
            if (scored) report.quantiles[q].qs_grid[p] = qs_sum / static_cast<double>(scored);
            quantile_excluded[p * n_q + q] = n_rec - scored;
        }
    });

    for (std::size_t l = 0; l < n_lv; ++l) {
        auto& m = report.levels[l];
        m.mean_picp = spatial_mean(layout, m.picp_grid);
        m.mean_below = spatial_mean(layout, m.below_grid);
        m.mean_above = spatial_mean(layout, m.above_grid);
        m.mean_is = spatial_mean(layout, m.is_grid);
        m.mean_iw = spatial_mean(layout, m.iw_grid);
        m.pct_deviation = 100.0 * (m.mean_picp - m.coverage) / m.coverage;
        for (std::size_t p = 0; p < layout.size(); ++p) m.unbounded_excluded += level_excluded[p * n_lv + l];
    }
    for (std::size_t q = 0; q < n_q; ++q) {
        auto& m = report.quantiles[q];
        m.mean_qs = spatial_mean(layout, m.qs_grid);
        for (std::size_t p = 0; p < layout.size(); ++p) m.unbounded_excluded += quantile_excluded[p * n_q + q];
    }
    return report;
}

}  // namespace gridcp
