#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "gridcp/grid.hpp"
#include "gridcp/quantiles.hpp"

namespace gridcp::synth {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream); identical arguments give identical draws.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

struct SynthConfig {
    std::size_t coarse_height = 9;
    std::size_t coarse_width = 11;
    std::size_t upscale_factor = 8;
    std::uint64_t elevation_seed = 7;
    std::uint64_t noise_seed = 42;
    double base_sigma = 1.0;
    double heterosc_gain = 1.0;
    /// Skew-normal delta in (-1, 1); 0 gives Gaussian noise.
    double skew = 0.0;
    /// Ensemble spread multiplier; below 1 the emulator is under-dispersed.
    double dispersion = 0.7;
    std::size_t member_count = 100;
    /// Evenly spaced fine rows/cols actually materialized; 0 keeps all of them.
    std::size_t sample_rows = 0;
    std::size_t sample_cols = 0;

    std::size_t fine_height() const { return coarse_height * upscale_factor; }
    std::size_t fine_width() const { return coarse_width * upscale_factor; }

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

/// Standardized skew-normal law (location 0, scale 1) parameterized by delta.
class SkewNormal {
public:
    explicit SkewNormal(double delta);

    double delta() const { return delta_; }
    /// Shape parameter a = delta / sqrt(1 - delta^2).
    double shape() const { return shape_; }

    double cdf(double z) const;
    /// CDF inversion by bisection; `tolerance` bounds the final bracket width.
    double quantile(double p, double tolerance = 1e-12) const;

    template <typename Engine>
    double sample(Engine& rng, std::normal_distribution<double>& normal) const {
        if (delta_ == 0.0) return normal(rng);
        const double u0 = normal(rng);
        const double u1 = normal(rng);
        return delta_ * std::abs(u0) + root_ * u1;
    }

private:
    double delta_;
    double shape_;
    double root_;
};

/// Closed-form conditional law of the truth given the coarse input, per grid point.
class OracleQuantiles {
public:
    OracleQuantiles(GridLayout layout, std::vector<double> location, std::vector<double> scale, SkewNormal law);

    const GridLayout& layout() const { return layout_; }
    double quantile(std::size_t point, double gamma) const;
    double cdf(std::size_t point, double x) const;
    QuantileGridSet to_grid_set(const LevelScheme& scheme) const;

private:
    GridLayout layout_;
    std::vector<double> location_;
    std::vector<double> scale_;
    SkewNormal law_;
};

/**
 * Static geometry of a synthetic domain: elevation, noise scale and the
 * materialized sample points. Records are drawn from it.
 *
 * truth = bilinear(coarse) - lapse * elevation + sigma * Z, Z ~ SkewNormal(skew),
 * sigma = base_sigma * (1 + heterosc_gain * elevation), elevation in [0, 1].
 */
class SyntheticDomain {
public:
    static constexpr double kLapse = 3.0;

    explicit SyntheticDomain(SynthConfig cfg);

    const SynthConfig& config() const { return cfg_; }
    const GridLayout& layout() const { return layout_; }
    std::span<const double> elevation() const { return elevation_; }
    std::span<const double> noise_scale() const { return sigma_; }
    const SkewNormal& noise_law() const { return law_; }

    CoarseField draw_coarse(Rng& rng) const;
    /// Upsampled coarse field plus the elevation term; the emulator's point prediction.
    GridField deterministic(const CoarseField& coarse) const;
    GridField draw_truth(const GridField& deterministic, Rng& rng) const;

    std::pair<CoarseField, GridField> generate_pair(Rng& rng) const;
    /// Residual members with scale dispersion * sigma, added to deterministic(coarse).
    EnsembleBatch emulate_ensemble(const CoarseField& coarse, Rng& rng) const;
    OracleQuantiles oracle(const CoarseField& coarse) const;

private:
    double bilinear(const CoarseField& coarse, std::size_t fine_row, std::size_t fine_col) const;

    SynthConfig cfg_;
    SkewNormal law_;
    GridLayout layout_;
    std::vector<std::size_t> rows_;
    std::vector<std::size_t> cols_;
    std::vector<double> elevation_;
    std::vector<double> sigma_;
};

std::pair<CoarseField, GridField> generate_pair(const SynthConfig& cfg, Rng& rng);
EnsembleBatch emulate_ensemble(const SynthConfig& cfg, const CoarseField& y, Rng& rng);
OracleQuantiles oracle_quantiles(const SynthConfig& cfg, const CoarseField& y);

/// One synthetic record with its point prediction and (optionally) its ensemble.
struct SyntheticRecord {
    CoarseField coarse;
    GridField truth;
    GridField deterministic;
    EnsembleBatch ensemble;
};

/**
 * Record `index` of stream family `family`; truth and ensemble use separate
 * substreams so the truth does not depend on whether an ensemble is drawn.
 */
SyntheticRecord draw_record(const SyntheticDomain& domain, std::uint64_t family, std::uint64_t index,
                            bool with_ensemble);

/// Kolmogorov-Smirnov distance between a sorted sample and a continuous CDF.
template <typename Cdf>
double ks_distance(std::span<const double> sorted_sample, Cdf&& cdf) {
    const double m = static_cast<double>(sorted_sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted_sample.size(); ++i) {
        const double f = cdf(sorted_sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    return d;
}

}  // namespace gridcp::synth
