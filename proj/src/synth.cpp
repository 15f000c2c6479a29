#include "gridcp/synth.hpp"

#include <boost/math/special_functions/owens_t.hpp>

#include <limits>
#include <numbers>
#include <stdexcept>

namespace gridcp::synth {

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

void SynthConfig::validate() const {
    if (coarse_height == 0 || coarse_width == 0) throw std::invalid_argument("coarse dims must be positive");
    if (upscale_factor == 0) throw std::invalid_argument("upscale_factor must be positive");
    if (!(base_sigma > 0.0)) throw std::invalid_argument("base_sigma must be positive");
    if (!(heterosc_gain >= 0.0)) throw std::invalid_argument("heterosc_gain must be nonnegative");
    if (!(skew > -1.0 && skew < 1.0)) throw std::invalid_argument("skew must lie in (-1, 1)");
    if (!(dispersion >= 0.0) || !std::isfinite(dispersion)) throw std::invalid_argument("dispersion must be nonnegative");
    if (member_count == 0) throw std::invalid_argument("member_count must be positive");
    if (sample_rows > fine_height() || sample_cols > fine_width()) {
        throw std::invalid_argument("sample grid exceeds fine grid");
    }
}

SkewNormal::SkewNormal(double delta)
    : delta_(delta), shape_(delta / std::sqrt(1.0 - delta * delta)), root_(std::sqrt(1.0 - delta * delta)) {
    if (!(delta > -1.0 && delta < 1.0)) throw std::invalid_argument("skew-normal delta must lie in (-1, 1)");
}

double SkewNormal::cdf(double z) const {
    const double phi = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    if (shape_ == 0.0) return phi;
    return phi - 2.0 * boost::math::owens_t(z, shape_);
}

double SkewNormal::quantile(double p, double tolerance) const {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
    double lo = -8.0;
    double hi = 8.0;
    while (cdf(lo) > p) lo *= 2.0;
    while (cdf(hi) < p) hi *= 2.0;
    while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

OracleQuantiles::OracleQuantiles(GridLayout layout, std::vector<double> location, std::vector<double> scale,
                                 SkewNormal law)
    : layout_(std::move(layout)), location_(std::move(location)), scale_(std::move(scale)), law_(law) {
    if (location_.size() != layout_.size() || scale_.size() != layout_.size()) {
        throw DataError("oracle parameter grids do not match layout");
    }
}

double OracleQuantiles::quantile(std::size_t point, double gamma) const {
    return location_[point] + scale_[point] * law_.quantile(gamma);
}

double OracleQuantiles::cdf(std::size_t point, double x) const {
    return law_.cdf((x - location_[point]) / scale_[point]);
}

QuantileGridSet OracleQuantiles::to_grid_set(const LevelScheme& scheme) const {
    QuantileGridSet out;
    out.layout = layout_;
    out.levels = scheme.quantile_levels();
    for (double g : out.levels) {
        // Standardized quantile to 1e-12 keeps the value error below 1e-10 for scales up to 100.
        const double z = law_.quantile(g, 1e-12);
        std::vector<double> grid(layout_.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t p = 0; p < layout_.size(); ++p) {
            if (layout_.valid(p)) grid[p] = location_[p] + scale_[p] * z;
        }
        out.grids.push_back(std::move(grid));
    }
    return out;
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t extent, std::size_t count) {
    std::vector<std::size_t> idx;
    if (count == 0 || count == extent) {
        for (std::size_t i = 0; i < extent; ++i) idx.push_back(i);
    } else if (count == 1) {
        idx.push_back(extent / 2);
    } else {
        for (std::size_t k = 0; k < count; ++k) {
            idx.push_back(static_cast<std::size_t>(
                std::llround(static_cast<double>(k) * static_cast<double>(extent - 1) / static_cast<double>(count - 1))));
        }
    }
    return idx;
}

struct Bump {
    double row, col, width, amplitude;
};

}  // namespace

SyntheticDomain::SyntheticDomain(SynthConfig cfg) : cfg_(cfg), law_(cfg.skew) {
    cfg_.validate();
    rows_ = sample_indices(cfg_.fine_height(), cfg_.sample_rows);
    cols_ = sample_indices(cfg_.fine_width(), cfg_.sample_cols);
    layout_ = GridLayout(rows_.size(), cols_.size());

    Rng rng = make_stream(cfg_.elevation_seed, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Bump> bumps(6);
    for (auto& b : bumps) {
        b.row = unit(rng);
        b.col = unit(rng);
        b.width = 0.08 + 0.22 * unit(rng);
        b.amplitude = 0.3 + 0.7 * unit(rng);
    }
    const double fh = static_cast<double>(cfg_.fine_height());
    const double fw = static_cast<double>(cfg_.fine_width());
    auto raw_elevation = [&](std::size_t r, std::size_t c) {
        const double y = (static_cast<double>(r) + 0.5) / fh;
        const double x = (static_cast<double>(c) + 0.5) / fw;
        double e = 0.0;
        for (const auto& b : bumps) {
            const double d2 = (y - b.row) * (y - b.row) + (x - b.col) * (x - b.col);
            e += b.amplitude * std::exp(-d2 / (2.0 * b.width * b.width));
        }
        return e;
    };
    // Normalize over the full fine grid so sub-sampling does not change values.
    double peak = 0.0;
    for (std::size_t r = 0; r < cfg_.fine_height(); ++r) {
        for (std::size_t c = 0; c < cfg_.fine_width(); ++c) peak = std::max(peak, raw_elevation(r, c));
    }
    elevation_.resize(layout_.size());
    sigma_.resize(layout_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (std::size_t j = 0; j < cols_.size(); ++j) {
            const std::size_t p = layout_.index(i, j);
            elevation_[p] = raw_elevation(rows_[i], cols_[j]) / peak;
            sigma_[p] = cfg_.base_sigma * (1.0 + cfg_.heterosc_gain * elevation_[p]);
        }
    }
}

CoarseField SyntheticDomain::draw_coarse(Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double base = 12.0 + 2.0 * normal(rng);
    const double grad_v = 2.0 * normal(rng);
    const double grad_u = 2.0 * normal(rng);
    struct Wave {
        double amp, fv, fu, phase;
    };
    Wave waves[2];
    for (auto& w : waves) {
        w.amp = 0.5 + unit(rng);
        w.fv = 0.5 + unit(rng);
        w.fu = 0.5 + unit(rng);
        w.phase = 2.0 * std::numbers::pi * unit(rng);
    }
    CoarseField y{cfg_.coarse_height, cfg_.coarse_width, std::vector<double>(cfg_.coarse_height * cfg_.coarse_width)};
    for (std::size_t r = 0; r < y.height; ++r) {
        for (std::size_t c = 0; c < y.width; ++c) {
            const double v = static_cast<double>(r) / static_cast<double>(y.height);
            const double u = static_cast<double>(c) / static_cast<double>(y.width);
            double val = base + grad_v * v + grad_u * u;
            for (const auto& w : waves) val += w.amp * std::cos(2.0 * std::numbers::pi * (w.fv * v + w.fu * u) + w.phase);
            y.values[r * y.width + c] = val + 0.2 * normal(rng);
        }
    }
    return y;
}

double SyntheticDomain::bilinear(const CoarseField& coarse, std::size_t fine_row, std::size_t fine_col) const {
    const double f = static_cast<double>(cfg_.upscale_factor);
    auto coord = [f](std::size_t i, std::size_t extent) {
        const double x = (static_cast<double>(i) + 0.5) / f - 0.5;
        return std::clamp(x, 0.0, static_cast<double>(extent - 1));
    };
    const double y = coord(fine_row, coarse.height);
    const double x = coord(fine_col, coarse.width);
    const auto r0 = static_cast<std::size_t>(y);
    const auto c0 = static_cast<std::size_t>(x);
    const std::size_t r1 = std::min(r0 + 1, coarse.height - 1);
    const std::size_t c1 = std::min(c0 + 1, coarse.width - 1);
    const double ty = y - static_cast<double>(r0);
    const double tx = x - static_cast<double>(c0);
    const double top = (1.0 - tx) * coarse.at(r0, c0) + tx * coarse.at(r0, c1);
    const double bottom = (1.0 - tx) * coarse.at(r1, c0) + tx * coarse.at(r1, c1);
    return (1.0 - ty) * top + ty * bottom;
}

GridField SyntheticDomain::deterministic(const CoarseField& coarse) const {
    if (coarse.height != cfg_.coarse_height || coarse.width != cfg_.coarse_width) {
        throw DataError("coarse field does not match synthetic configuration");
    }
    std::vector<double> v(layout_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (std::size_t j = 0; j < cols_.size(); ++j) {
            const std::size_t p = layout_.index(i, j);
            v[p] = bilinear(coarse, rows_[i], cols_[j]) - kLapse * elevation_[p];
        }
    }
    return GridField(layout_, std::move(v));
}

GridField SyntheticDomain::draw_truth(const GridField& deterministic, Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(layout_.size());
    for (std::size_t p = 0; p < v.size(); ++p) v[p] = deterministic[p] + sigma_[p] * law_.sample(rng, normal);
    return GridField(layout_, std::move(v));
}

std::pair<CoarseField, GridField> SyntheticDomain::generate_pair(Rng& rng) const {
    CoarseField y = draw_coarse(rng);
    GridField x = draw_truth(deterministic(y), rng);
    return {std::move(y), std::move(x)};
}

EnsembleBatch SyntheticDomain::emulate_ensemble(const CoarseField& coarse, Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    EnsembleBatch residuals;
    residuals.members.reserve(cfg_.member_count);
    for (std::size_t m = 0; m < cfg_.member_count; ++m) {
        std::vector<double> r(layout_.size());
        for (std::size_t p = 0; p < r.size(); ++p) {
            r[p] = cfg_.dispersion == 0.0 ? 0.0 : cfg_.dispersion * sigma_[p] * law_.sample(rng, normal);
        }
        residuals.members.emplace_back(layout_, std::move(r));
    }
    return compose_residual(deterministic(coarse), residuals);
}

OracleQuantiles SyntheticDomain::oracle(const CoarseField& coarse) const {
    GridField det = deterministic(coarse);
    return OracleQuantiles(layout_, std::vector<double>(det.values().begin(), det.values().end()), sigma_, law_);
}

std::pair<CoarseField, GridField> generate_pair(const SynthConfig& cfg, Rng& rng) {
    return SyntheticDomain(cfg).generate_pair(rng);
}

EnsembleBatch emulate_ensemble(const SynthConfig& cfg, const CoarseField& y, Rng& rng) {
    return SyntheticDomain(cfg).emulate_ensemble(y, rng);
}

OracleQuantiles oracle_quantiles(const SynthConfig& cfg, const CoarseField& y) {
    return SyntheticDomain(cfg).oracle(y);
}

SyntheticRecord draw_record(const SyntheticDomain& domain, std::uint64_t family, std::uint64_t index,
                            bool with_ensemble) {
    const std::uint64_t base = (family << 32) + 2 * index;
    Rng truth_rng = make_stream(domain.config().noise_seed, base);
    SyntheticRecord rec;
    rec.coarse = domain.draw_coarse(truth_rng);
    rec.deterministic = domain.deterministic(rec.coarse);
    rec.truth = domain.draw_truth(rec.deterministic, truth_rng);
    if (with_ensemble) {
        Rng ens_rng = make_stream(domain.config().noise_seed, base + 1);
        rec.ensemble = domain.emulate_ensemble(rec.coarse, ens_rng);
    }
    return rec;
}

}  // namespace gridcp::synth
