#include "gridcp/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gridcp {

std::size_t QuantileGridSet::level_index(double gamma) const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (same_level(levels[i], gamma)) return i;
    }
    std::ostringstream os;
    os << "quantile set has no level " << gamma;
    throw DataError(os.str());
}

std::size_t empirical_rank(std::size_t member_count, double gamma) {
    if (member_count == 0) throw DataError("empty ensemble");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
    const double m = static_cast<double>(member_count);
    auto reaches = [&](std::size_t k) { return static_cast<double>(k) / m >= gamma; };
    // ceil(gamma*M) can land one off when gamma*M is integral up to rounding.
    auto k = static_cast<std::size_t>(std::ceil(gamma * m));
    k = std::clamp<std::size_t>(k, 1, member_count);
    while (k > 1 && reaches(k - 1)) --k;
    while (k < member_count && !reaches(k)) ++k;
    return k;
}

double empirical_quantile(std::span<const double> sorted_values, double gamma) {
    if (sorted_values.empty()) throw DataError("empty ensemble");
    return sorted_values[empirical_rank(sorted_values.size(), gamma) - 1];
}

QuantileGridSet ensemble_to_quantiles(const EnsembleBatch& batch, const LevelScheme& scheme) {
    if (auto err = batch.consistency_error()) throw DataError(*err);

    const GridLayout& layout = batch.members.front().layout();
    const std::size_t m = batch.member_count();
    const auto& levels = scheme.quantile_levels();

    QuantileGridSet out;
    out.layout = layout;
    out.levels = levels;
    out.grids.assign(levels.size(), std::vector<double>(layout.size(), std::numeric_limits<double>::quiet_NaN()));

    for (double g : levels) {
        const double needed = 1.0 / std::min(g, 1.0 - g);
        if (static_cast<double>(m) < needed - LevelScheme::kLevelTolerance) {
            std::ostringstream os;
            os << "ensemble of " << m << " members is too small to resolve level " << g
               << " (needs at least " << static_cast<std::size_t>(std::ceil(needed - 1e-9)) << ")";
            out.warnings.push_back(os.str());
        }
    }

    std::vector<std::size_t> ranks;
    ranks.reserve(levels.size());
    for (double g : levels) ranks.push_back(empirical_rank(m, g));

    std::vector<double> column(m);
    for (std::size_t p = 0; p < layout.size(); ++p) {
        if (!layout.valid(p)) continue;
        for (std::size_t k = 0; k < m; ++k) column[k] = batch.members[k][p];
        std::sort(column.begin(), column.end());
        for (std::size_t l = 0; l < levels.size(); ++l) out.grids[l][p] = column[ranks[l] - 1];
    }
    return out;
}

EnsembleBatch compose_residual(const GridField& deterministic, const EnsembleBatch& residual_members) {
    if (auto err = residual_members.consistency_error()) throw DataError(*err);
    const GridLayout& layout = deterministic.layout();
    if (!(residual_members.members.front().layout() == layout)) {
        throw DataError("residual members do not match deterministic prediction layout");
    }
    EnsembleBatch out;
    out.members.reserve(residual_members.member_count());
    for (const auto& r : residual_members.members) {
        std::vector<double> v(layout.size());
        for (std::size_t p = 0; p < v.size(); ++p) v[p] = deterministic[p] + r[p];
        out.members.emplace_back(layout, std::move(v));
    }
    return out;
}

}  // namespace gridcp
