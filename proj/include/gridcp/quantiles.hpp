#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gridcp/grid.hpp"

namespace gridcp {

/**
 * Per-grid-point empirical quantiles of an ensemble, one grid per level.
 * Values at invalid points are NaN.
 */
struct QuantileGridSet {
    GridLayout layout;
    std::vector<double> levels;
    std::vector<std::vector<double>> grids;
    /// Non-fatal notes, e.g. ensemble too small for the requested tails.
    std::vector<std::string> warnings;

    std::size_t level_index(double gamma) const;
    const std::vector<double>& grid(double gamma) const { return grids[level_index(gamma)]; }
    GridField field(double gamma) const { return GridField(layout, grid(gamma)); }
};

/// Smallest k in [1, m] with k/m >= gamma.
std::size_t empirical_rank(std::size_t member_count, double gamma);

/**
 * inf{x : (1/M) #{v_m <= x} >= gamma} over nondecreasing `sorted_values`,
 * i.e. the ceil(gamma*M)-th order statistic. No interpolation.
 */
double empirical_quantile(std::span<const double> sorted_values, double gamma);

QuantileGridSet ensemble_to_quantiles(const EnsembleBatch& batch, const LevelScheme& scheme);

/// Member m of the result is deterministic + residual member m.
EnsembleBatch compose_residual(const GridField& deterministic, const EnsembleBatch& residual_members);

}  // namespace gridcp
