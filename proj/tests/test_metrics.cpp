#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gridcp/metrics.hpp"

using namespace gridcp;

namespace {

IntervalGridSet interval(double lo, double hi, double coverage) {
    IntervalGridSet iv;
    iv.layout = GridLayout(1, 1);
    iv.coverage_levels = {coverage};
    iv.lower = {{lo}};
    iv.upper = {{hi}};
    return iv;
}

}  // namespace

TEST_CASE("interval score examples") {
    CHECK(interval_score(0, 1, 0.5, 0.1) == doctest::Approx(1.0));
    CHECK(interval_score(0, 1, 1.2, 0.1) == doctest::Approx(5.0));
    CHECK(interval_score(0, 1, -0.5, 0.2) == doctest::Approx(6.0));
    CHECK(interval_score(0, 0, 0, 0.5) == 0.0);
    CHECK_THROWS_AS(interval_score(1, 0, 0.5, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(interval_score(0, 1, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("quantile score examples") {
    CHECK(quantile_score(0, 1, 0.9) == doctest::Approx(0.9));
    CHECK(quantile_score(1, 0, 0.9) == doctest::Approx(0.1));
    CHECK(quantile_score(2.5, 2.5, 0.3) == 0.0);
}

TEST_CASE("Winkler equals scaled pinball pair") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10, 10);
    std::uniform_real_distribution<double> a(0.01, 0.99);
    for (int i = 0; i < 2000; ++i) {
        double l = u(rng), h = u(rng);
        if (l > h) std::swap(l, h);
        const double x = u(rng), al = a(rng);
        const double is = interval_score(l, h, x, al);
        const double qs = 2.0 / al * (quantile_score(l, x, al / 2) + quantile_score(h, x, 1 - al / 2));
        CHECK(std::abs(is - qs) <= 1e-12 * std::max(1.0, std::abs(is)));
    }
}

TEST_CASE("pinball loss is minimized by the true quantile") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    std::vector<double> xs(200000);
    for (auto& x : xs) x = n(rng);
    for (double g : {0.1, 0.5, 0.9}) {
        // standard normal quantiles at 0.1, 0.5, 0.9
        const double q = g == 0.5 ? 0.0 : (g < 0.5 ? -1.2815515655446004 : 1.2815515655446004);
        auto mean_qs = [&](double pred) {
            double s = 0;
            for (double x : xs) s += quantile_score(pred, x, g);
            return s / static_cast<double>(xs.size());
        };
        const double best = mean_qs(q);
        for (double shift : {-0.5, -0.2, -0.1, 0.1, 0.2, 0.5}) CHECK(best <= mean_qs(q + shift) + 1e-4);
    }
}

TEST_CASE("picp counts closed intervals") {
    std::vector<IntervalGridSet> iv{interval(0, 1, 0.5), interval(0, 1, 0.5), interval(0, 1, 0.5)};
    std::vector<GridField> x{GridField(1, 1, {0.5}), GridField(1, 1, {2.0}), GridField(1, 1, {1.0})};
    const PicpResult r = picp(iv, x, 0.5);
    CHECK(r.mean == doctest::Approx(2.0 / 3.0));

    std::vector<GridField> inside{GridField(1, 1, {0.0}), GridField(1, 1, {0.3}), GridField(1, 1, {1.0})};
    CHECK(picp(iv, inside, 0.5).mean == 1.0);

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<IntervalGridSet> open{interval(-inf, inf, 0.5)};
    std::vector<GridField> far{GridField(1, 1, {1e300})};
    CHECK(picp(open, far, 0.5).mean == 1.0);

    CHECK_THROWS_AS(picp(std::vector<IntervalGridSet>{}, std::vector<GridField>{}, 0.5), DataError);
}

TEST_CASE("evaluate") {
    const LevelScheme s = LevelScheme::from_coverage({0.5});

    SUBCASE("zero-width intervals on constant data") {
        std::vector<IntervalGridSet> iv(4, interval(3.0, 3.0, 0.5));
        std::vector<GridField> x(4, GridField(1, 1, {3.0}));
        const MetricReport r = evaluate(iv, {}, x, s);
        const auto& m = r.level(0.5);
        CHECK(m.mean_picp == 1.0);
        CHECK(m.mean_is == 0.0);
        CHECK(m.mean_iw == 0.0);
        CHECK(m.pct_deviation == doctest::Approx(100.0));
        CHECK(r.test_records == 4);
        CHECK(r.valid_points == 1);
        CHECK(r.quantile(0.25).mean_qs == 0.0);
    }
    SUBCASE("layout and masking") {
        const Mask mask{1, 1, 0};
        std::mt19937_64 rng(9);
        std::normal_distribution<double> n;
        std::vector<IntervalGridSet> iv;
        std::vector<GridField> x;
        for (int i = 0; i < 30; ++i) {
            IntervalGridSet v;
            v.layout = GridLayout(1, 3, mask);
            v.coverage_levels = {0.5};
            v.lower = {{-0.5, -1.0, std::nan("")}};
            v.upper = {{0.5, 1.0, std::nan("")}};
            iv.push_back(v);
            x.emplace_back(1, 3, std::vector<double>{n(rng), n(rng), std::nan("")}, mask);
        }
        const MetricReport r = evaluate(iv, {}, x, s);
        const auto& m = r.level(0.5);
        CHECK(r.valid_points == 2);
        CHECK(std::isnan(m.picp_grid[2]));
        CHECK(std::isnan(m.is_grid[2]));
        CHECK(m.mean_iw == doctest::Approx(1.5));
        CHECK(m.mean_is >= m.mean_iw);
        CHECK(m.mean_picp + m.mean_below + m.mean_above == doctest::Approx(1.0));
        CHECK(m.mean_picp == doctest::Approx((m.picp_grid[0] + m.picp_grid[1]) / 2.0));
        CHECK_THROWS_AS(r.level(0.9), DataError);
    }
    SUBCASE("unbounded intervals are excluded from widths") {
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<IntervalGridSet> iv{interval(-inf, inf, 0.5), interval(0.0, 2.0, 0.5)};
        std::vector<GridField> x(2, GridField(1, 1, {5.0}));
        const MetricReport r = evaluate(iv, {}, x, s);
        const auto& m = r.level(0.5);
        CHECK(m.unbounded_excluded == 1);
        CHECK(m.mean_picp == 0.5);
        CHECK(m.mean_iw == 2.0);
        CHECK(m.mean_is == doctest::Approx(2.0 + 4.0 * 3.0));
    }
    SUBCASE("is >= iw with equality at full coverage") {
        std::vector<IntervalGridSet> iv(3, interval(-1.0, 1.0, 0.5));
        std::vector<GridField> x{GridField(1, 1, {0.0}), GridField(1, 1, {0.9}), GridField(1, 1, {-1.0})};
        const auto& m = evaluate(iv, {}, x, s).level(0.5);
        CHECK(m.mean_is == m.mean_iw);
        x[1] = GridField(1, 1, {1.1});
        const auto& m2 = evaluate(iv, {}, x, s).level(0.5);
        CHECK(m2.mean_is > m2.mean_iw);
    }
    SUBCASE("missing level") {
        std::vector<IntervalGridSet> iv{interval(0, 1, 0.3)};
        std::vector<GridField> x{GridField(1, 1, {0.5})};
        CHECK_THROWS_AS(evaluate(iv, {}, x, s), DataError);
    }
}

TEST_CASE("evaluate is independent of worker count") {
    const LevelScheme s = default_levels();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    std::vector<IntervalGridSet> iv;
    std::vector<GridField> x;
    for (int i = 0; i < 10; ++i) {
        IntervalGridSet v;
        v.layout = GridLayout(4, 5);
        v.coverage_levels = s.coverage_levels();
        for (double c : s.coverage_levels()) {
            std::vector<double> lo(20), hi(20);
            for (int p = 0; p < 20; ++p) {
                lo[p] = -c - 0.1 * p;
                hi[p] = c + 0.05 * p;
            }
            v.lower.push_back(lo);
            v.upper.push_back(hi);
        }
        iv.push_back(v);
        std::vector<double> t(20);
        for (auto& e : t) e = n(rng);
        x.emplace_back(4, 5, t);
    }
    const MetricReport a = evaluate(iv, {}, x, s, 1);
    const MetricReport b = evaluate(iv, {}, x, s, 3);
    for (std::size_t l = 0; l < a.levels.size(); ++l) {
        CHECK(a.levels[l].mean_picp == b.levels[l].mean_picp);
        CHECK(a.levels[l].mean_is == b.levels[l].mean_is);
        CHECK(a.levels[l].is_grid == b.levels[l].is_grid);
    }
    for (std::size_t q = 0; q < a.quantiles.size(); ++q) CHECK(a.quantiles[q].mean_qs == b.quantiles[q].mean_qs);
}
