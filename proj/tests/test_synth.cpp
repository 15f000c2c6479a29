#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "gridcp/conformal.hpp"
#include "gridcp/metrics.hpp"
#include "gridcp/synth.hpp"

using namespace gridcp;
using namespace gridcp::synth;

namespace {

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double big_phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Simpson integration of the skew-normal density 2 phi(t) Phi(a t) from -12 to z.
double skew_cdf_by_quadrature(double z, double delta) {
    const double a = delta / std::sqrt(1.0 - delta * delta);
    const double lo = -12.0;
    const int n = 20000;
    const double h = (z - lo) / n;
    auto f = [&](double t) { return 2.0 * phi(t) * big_phi(a * t); };
    double s = f(lo) + f(z);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

SynthConfig small_config() {
    SynthConfig c;
    c.coarse_height = 3;
    c.coarse_width = 4;
    c.upscale_factor = 4;
    c.member_count = 30;
    return c;
}

}  // namespace

TEST_CASE("config validation and dims") {
    SynthConfig c;
    CHECK(c.fine_height() == 72);
    CHECK(c.fine_width() == 88);
    const SyntheticDomain d(c);
    CHECK(d.layout().height() == 72);
    CHECK(d.layout().width() == 88);

    SynthConfig bad = c;
    bad.skew = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.base_sigma = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.upscale_factor = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.sample_rows = 100;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    SynthConfig sub = c;
    sub.sample_rows = 10;
    sub.sample_cols = 10;
    CHECK(SyntheticDomain(sub).layout().size() == 100);
}

TEST_CASE("skew-normal law") {
    for (double delta : {-0.9, -0.5, 0.0, 0.6, 0.95}) {
        const SkewNormal law(delta);
        for (double z : {-2.5, -1.0, 0.0, 0.3, 1.7}) {
            CHECK(law.cdf(z) == doctest::Approx(skew_cdf_by_quadrature(z, delta)).epsilon(1e-9));
        }
        for (double p : {0.01, 0.25, 0.5, 0.9, 0.999}) {
            const double q = law.quantile(p);
            CHECK(std::abs(law.cdf(q) - p) < 1e-10);
        }
    }
    CHECK(SkewNormal(0.0).quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-10));
    CHECK_THROWS_AS(SkewNormal(1.0), std::invalid_argument);
}

TEST_CASE("bisection quantile agrees with a large sample") {
    const SkewNormal law(0.8);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;
    const std::size_t draws = 10'000'000;
    std::vector<double> xs(draws);
    for (auto& x : xs) x = law.sample(rng, n);
    for (double p : {0.05, 0.5, 0.95}) {
        const std::size_t k = static_cast<std::size_t>(std::ceil(p * draws)) - 1;
        std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
        const double emp = xs[k];
        const double q = law.quantile(p);
        // standard error of a sample quantile: sqrt(p(1-p)/N) / density
        const double h = 1e-5;
        const double dens = (law.cdf(q + h) - law.cdf(q - h)) / (2 * h);
        const double se = std::sqrt(p * (1 - p) / draws) / dens;
        CHECK(std::abs(emp - q) < 3.0 * se);
    }
}

TEST_CASE("pairs are deterministic in the seed") {
    const SynthConfig c = small_config();
    Rng a = make_stream(c.noise_seed, 5);
    Rng b = make_stream(c.noise_seed, 5);
    const auto pa = generate_pair(c, a);
    const auto pb = generate_pair(c, b);
    CHECK(pa.first.values == pb.first.values);
    CHECK(pa.second == pb.second);
    Rng other = make_stream(c.noise_seed, 6);
    CHECK_FALSE(generate_pair(c, other).second == pa.second);

    const SyntheticDomain d(c);
    const auto r1 = draw_record(d, 0, 3, true);
    const auto r2 = draw_record(d, 0, 3, false);
    CHECK(r1.truth == r2.truth);
    CHECK(r1.ensemble.member_count() == c.member_count);
    CHECK(r2.ensemble.member_count() == 0);
}

TEST_CASE("homoscedastic Gaussian oracle") {
    SynthConfig c = small_config();
    c.heterosc_gain = 0.0;
    c.base_sigma = 2.0;
    const SyntheticDomain d(c);
    Rng rng = make_stream(1, 1);
    const CoarseField y = d.draw_coarse(rng);
    const GridField det = d.deterministic(y);
    const OracleQuantiles o = d.oracle(y);
    const double z = 1.6448536269514722;
    for (std::size_t p = 0; p < d.layout().size(); ++p) {
        CHECK(o.quantile(p, 0.95) - o.quantile(p, 0.05) == doctest::Approx(2.0 * 2.0 * z).epsilon(1e-9));
        CHECK(o.quantile(p, 0.5) == doctest::Approx(det[p]).epsilon(1e-12));
        CHECK(o.quantile(p, 0.3) < o.quantile(p, 0.31));
    }
    const QuantileGridSet g = o.to_grid_set(default_levels());
    CHECK(g.grid(0.95)[0] == o.quantile(0, 0.95));
}

TEST_CASE("heteroscedastic scale follows elevation") {
    const SynthConfig c = small_config();
    const SyntheticDomain d(c);
    double lo = 1e9, hi = -1e9;
    for (std::size_t p = 0; p < d.layout().size(); ++p) {
        CHECK(d.noise_scale()[p] == doctest::Approx(c.base_sigma * (1 + c.heterosc_gain * d.elevation()[p])));
        lo = std::min(lo, d.elevation()[p]);
        hi = std::max(hi, d.elevation()[p]);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    CHECK(hi - lo > 0.5);
}

TEST_CASE("zero dispersion collapses the ensemble") {
    SynthConfig c = small_config();
    c.dispersion = 0.0;
    Rng rng = make_stream(2, 2);
    const auto [y, x] = generate_pair(c, rng);
    const EnsembleBatch e = emulate_ensemble(c, y, rng);
    const GridField det = SyntheticDomain(c).deterministic(y);
    for (const auto& m : e.members) CHECK(m == det);
}

TEST_CASE("under-dispersed scalar coverage") {
    // 2 Phi(0.7 z_0.95) - 1 by closed form and by 10^6 scalar draws
    const double z = 1.6448536269514722;
    const double target = 2.0 * big_phi(0.7 * z) - 1.0;
    CHECK(target == doctest::Approx(0.7497).epsilon(5e-4));
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n;
    std::size_t hit = 0;
    const std::size_t draws = 1'000'000;
    for (std::size_t i = 0; i < draws; ++i) hit += std::abs(n(rng)) <= 0.7 * z;
    const double p = static_cast<double>(hit) / draws;
    CHECK(std::abs(p - target) < 3.0 * std::sqrt(target * (1 - target) / draws));
}

TEST_CASE("raw coverage is nondecreasing in dispersion") {
    const LevelScheme s = default_levels();
    std::vector<std::vector<double>> cover;
    for (double lambda : {0.5, 0.7, 1.0, 1.3}) {
        SynthConfig c = small_config();
        c.dispersion = lambda;
        c.member_count = 200;
        c.skew = 0.5;
        const SyntheticDomain d(c);
        std::vector<IntervalGridSet> iv;
        std::vector<GridField> x;
        for (std::size_t i = 0; i < 40; ++i) {
            auto r = draw_record(d, 0, i, true);
            iv.push_back(raw_intervals(ensemble_to_quantiles(r.ensemble, s), s));
            x.push_back(std::move(r.truth));
        }
        const MetricReport m = evaluate(iv, {}, x, s);
        std::vector<double> row;
        for (const auto& l : m.levels) row.push_back(l.mean_picp);
        cover.push_back(row);
    }
    for (std::size_t k = 0; k + 1 < cover.size(); ++k) {
        for (std::size_t l = 0; l < cover[k].size(); ++l) CHECK(cover[k][l] <= cover[k + 1][l] + 0.01);
    }
}

TEST_CASE("ks distance") {
    const std::vector<double> u{0.1, 0.4, 0.7};
    CHECK(ks_distance(u, [](double v) { return v; }) == doctest::Approx(0.3));
    const std::vector<double> exact{1.0 / 6, 3.0 / 6, 5.0 / 6};
    CHECK(ks_distance(exact, [](double v) { return v; }) == doctest::Approx(1.0 / 6));
}
