// Acceptance gate: prints one PASS/FAIL line per criterion and exits nonzero on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "gridcp/conformal.hpp"
#include "gridcp/metrics.hpp"
#include "gridcp/pipeline/pipeline.hpp"
#include "gridcp/quantiles.hpp"
#include "gridcp/synth.hpp"

using namespace gridcp;
using namespace gridcp::pipeline;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
    std::printf("criterion %d [%s] %s: %s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

void guarded(int id, const std::string& name, const std::function<Outcome()>& fn) {
    try {
        report(id, name, fn());
    } catch (const std::exception& e) {
        report(id, name, Outcome{false, std::string("exception: ") + e.what()});
    }
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c, d);
    return buf;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gridcp_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }
double normal_cdf(double z) { return boost::math::cdf(boost::math::normal(), z); }

// 1. Split-CP coverage band.
Outcome split_cp_band() {
    PipelineConfig cfg;
    cfg.method = Provenance::split_cp;
    cfg.scheme = LevelScheme::from_coverage({0.5, 0.9});
    cfg.n_calibration = 99;
    cfg.n_test = 1000;
    cfg.trial_count = 200;
    synth::SynthConfig s;
    s.dispersion = 1.0;
    s.sample_rows = 10;
    s.sample_cols = 10;
    cfg.synth = s;

    const auto t0 = std::chrono::steady_clock::now();
    const CoverageStudy study = run_coverage_study(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    Outcome o{true, ""};
    const double units = static_cast<double>(cfg.trial_count * study.valid_points);
    for (std::size_t l = 0; l < study.levels.size(); ++l) {
        const double c = study.levels[l];
        double mean = 0.0;
        for (const auto& trial : study.coverage) mean += trial[l];
        mean /= static_cast<double>(study.coverage.size());
        const double se = std::sqrt(mean * (1.0 - mean) / units);
        const double lo = c - 3.0 * se;
        const double hi = c + 1.0 / static_cast<double>(cfg.n_calibration + 1) + 3.0 * se;
        const bool ok = mean >= lo && mean <= hi;
        o.pass = o.pass && ok;
        o.detail += fmt("level %.1f coverage %.5f in [%.5f, %.5f]; ", c, mean, lo, hi);
    }
    o.pass = o.pass && study.valid_points == 100 && secs < 60.0;
    o.detail += fmt("%.0f valid points, %.1f s single-threaded (limit 60)", static_cast<double>(study.valid_points), secs);
    return o;
}

// Shared by criteria 2, 3 and 7: lambda = 0.7 Gaussian emulator, 730 + 730 records.
struct DispersionRun {
    MetricReport raw;
    MetricReport cqr;
};

DispersionRun dispersion_run() {
    const fs::path root = scratch("dispersion");
    PipelineConfig cfg;
    cfg.dataset_dir = root / "data";
    cfg.output_dir = root / "out";
    cfg.n_calibration = 730;
    cfg.n_test = 730;
    cfg.store_ensembles = false;
    synth::SynthConfig s;
    s.dispersion = 0.7;
    s.skew = 0.0;
    s.member_count = 1000;
    s.sample_rows = 10;
    s.sample_cols = 10;
    cfg.synth = s;

    run_synth(cfg, cfg.dataset_dir);
    DispersionRun r;
    cfg.method = Provenance::raw_quantile;
    r.raw = run_evaluate(cfg);
    cfg.method = Provenance::cqr;
    run_calibrate(cfg);
    r.cqr = run_evaluate(cfg);
    fs::remove_all(root);
    return r;
}

// 2. Under-dispersion reproduction.
Outcome under_dispersion(const DispersionRun& run) {
    const double target = 2.0 * normal_cdf(0.7 * normal_quantile(0.95)) - 1.0;
    const double picp = run.raw.level(0.9).mean_picp;
    return Outcome{std::abs(picp - target) <= 0.02,
                   fmt("raw PICP@0.9 = %.5f, oracle %.5f, tolerance 0.02 (%.0f test records)", picp, target,
                       static_cast<double>(run.raw.test_records))};
}

// 3. CQR correction.
Outcome cqr_correction(const DispersionRun& run) {
    Outcome o{run.cqr.test_records == 730, ""};
    for (const auto& m : run.cqr.levels) {
        const double half_alpha = (1.0 - m.coverage) / 2.0;
        const bool ok = std::abs(m.mean_picp - m.coverage) <= 0.02 && m.mean_below <= half_alpha + 0.015 &&
                        m.mean_above <= half_alpha + 0.015;
        o.pass = o.pass && ok;
        o.detail += fmt("%.1f: PICP %.4f below %.4f above %.4f; ", m.coverage, m.mean_picp, m.mean_below, m.mean_above);
    }
    o.detail += "tolerance 0.02, tail limit alpha/2 + 0.015";
    return o;
}

// 4. Winkler-pinball identity.
Outcome metric_identity() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> value(-100.0, 100.0);
    std::uniform_real_distribution<double> alpha(1e-3, 1.0 - 1e-3);
    double worst = 0.0;
    const int tuples = 100000;
    for (int i = 0; i < tuples; ++i) {
        double l = value(rng), u = value(rng);
        if (l > u) std::swap(l, u);
        const double x = value(rng), a = alpha(rng);
        const double lhs = interval_score(l, u, x, a);
        const double rhs = 2.0 / a * (quantile_score(l, x, a / 2.0) + quantile_score(u, x, 1.0 - a / 2.0));
        const double scale = std::max(std::abs(lhs), std::abs(rhs));
        if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return Outcome{worst <= 1e-12, fmt("%.0f tuples, max relative error %.3g (limit 1e-12)", tuples, worst)};
}

// 5. Quantile oracle equivalence against an integer count scan.
Outcome quantile_oracle() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> grid(-20, 20);
    std::normal_distribution<double> normal;
    std::size_t checked = 0, mismatches = 0;
    for (std::size_t m = 1; m <= 50; ++m) {
        for (int e = 0; e < 20; ++e) {
            std::vector<double> v(m);
            // half the ensembles on a coarse lattice to force ties
            for (auto& x : v) x = e % 2 ? grid(rng) * 0.5 : normal(rng);
            std::vector<double> sorted = v;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t k = 1; k <= 99; ++k) {
                // smallest member value x with #{v <= x} / m >= k / 100, in exact integers
                double expect = 0.0;
                bool found = false;
                for (double cand : v) {
                    std::size_t count = 0;
                    for (double w : v) count += w <= cand;
                    if (count * 100 >= k * m && (!found || cand < expect)) {
                        expect = cand;
                        found = true;
                    }
                }
                ++checked;
                if (!found || empirical_quantile(sorted, static_cast<double>(k) / 100.0) != expect) ++mismatches;
            }
        }
    }
    return Outcome{mismatches == 0, fmt("%.0f ensembles (M = 1..50), %.0f comparisons, %.0f mismatches", 1000.0,
                                        static_cast<double>(checked), static_cast<double>(mismatches))};
}

// 6. Ensemble quantiles converge to the closed-form skew-normal law.
Outcome oracle_convergence() {
    synth::SynthConfig s;
    s.dispersion = 1.0;
    s.skew = 0.8;
    const synth::SyntheticDomain domain(s);
    synth::Rng rng = synth::make_stream(s.noise_seed, 0);
    const CoarseField y = domain.draw_coarse(rng);
    const synth::OracleQuantiles oracle = domain.oracle(y);

    const std::size_t w = domain.layout().width();
    const std::size_t h = domain.layout().height();
    const std::vector<std::size_t> probes{0, domain.layout().index(h / 2, w / 2), domain.layout().index(h / 4, 3 * w / 4),
                                          domain.layout().index(3 * h / 4, w / 5), domain.layout().size() - 1};
    const std::vector<std::size_t> sizes{10, 100, 1000};
    // mean KS over independent ensembles per size; a single M = 10 draw is too noisy to order reliably
    const std::size_t replicates = 20;
    std::vector<std::vector<double>> ks(probes.size(), std::vector<double>(sizes.size(), 0.0));
    for (std::size_t mi = 0; mi < sizes.size(); ++mi) {
        synth::SynthConfig sc = s;
        sc.member_count = sizes[mi];
        const synth::SyntheticDomain d(sc);
        for (std::size_t r = 0; r < replicates; ++r) {
            synth::Rng er = synth::make_stream(s.noise_seed, 1000 * (mi + 1) + r);
            const EnsembleBatch e = d.emulate_ensemble(y, er);
            for (std::size_t p = 0; p < probes.size(); ++p) {
                std::vector<double> sample;
                for (const auto& m : e.members) sample.push_back(m[probes[p]]);
                std::sort(sample.begin(), sample.end());
                ks[p][mi] += synth::ks_distance(sample, [&](double x) { return oracle.cdf(probes[p], x); }) /
                             static_cast<double>(replicates);
            }
        }
    }
    Outcome o{true, ""};
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const bool ok = ks[p][0] > ks[p][1] && ks[p][1] > ks[p][2] && ks[p][2] < 0.05;
        o.pass = o.pass && ok;
        o.detail += fmt("point %.0f KS %.4f > %.4f > %.4f; ", static_cast<double>(probes[p]), ks[p][0], ks[p][1], ks[p][2]);
    }
    o.detail += "mean of 20 ensembles per M = 10, 100, 1000, limit 0.05 at M = 1000";
    return o;
}

// 7. Direction of scores.
Outcome score_direction(const DispersionRun& run) {
    const auto& raw = run.raw.level(0.9);
    const auto& cqr = run.cqr.level(0.9);
    return Outcome{cqr.mean_is <= raw.mean_is && cqr.mean_iw > raw.mean_iw,
                   fmt("IS@0.9 cqr %.4f <= raw %.4f; IW@0.9 cqr %.4f > raw %.4f", cqr.mean_is, raw.mean_is,
                       cqr.mean_iw, raw.mean_iw)};
}

// 8. Byte-identical reports from two full CLI runs.
int cli(const std::string& args) {
    const std::string cmd = std::string(GRIDCP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome determinism() {
    const fs::path root = scratch("determinism");
    const fs::path cfg = root / "config.json";
    std::ofstream(cfg) << R"({"n_calibration": 60, "n_test": 40, "trial_count": 5,
  "synth": {"skew": 0.5, "dispersion": 0.7, "member_count": 50, "sample_rows": 6, "sample_cols": 8}})";

    for (const char* run : {"a", "b"}) {
        const std::string base = "--config " + cfg.string() + " --data " + (root / run / "data").string() + " --out " +
                                 (root / run / "out").string();
        const std::string jobs = std::string(run) == "a" ? " --jobs 1" : " --jobs 2";
        const std::vector<std::string> steps{"synth", "quantiles", "calibrate --method cqr", "apply --method cqr",
                                             "evaluate --method cqr", "calibrate --method split-cp",
                                             "evaluate --method split-cp", "evaluate --method raw", "report",
                                             "coverage-sim --method cqr --level 0.5 --level 0.9"};
        for (const auto& step : steps) {
            const int rc = cli(step + " " + base + jobs);
            if (rc != 0) return Outcome{false, "step '" + step + "' exited with " + std::to_string(rc)};
        }
    }

    std::size_t files = 0, differing = 0;
    std::string first_diff;
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
        const auto ext = entry.path().extension();
        if (!entry.is_regular_file() || (ext != ".csv" && ext != ".json")) continue;
        const fs::path rel = fs::relative(entry.path(), root / "a");
        ++files;
        if (!fs::exists(root / "b" / rel) || slurp(entry.path()) != slurp(root / "b" / rel)) {
            if (differing++ == 0) first_diff = rel.string();
        }
    }
    fs::remove_all(root);
    Outcome o{files > 0 && differing == 0, fmt("%.0f CSV/JSON files compared, %.0f differ (jobs 1 vs 2)",
                                               static_cast<double>(files), static_cast<double>(differing))};
    if (differing) o.detail += ", first: " + first_diff;
    return o;
}

}  // namespace

int main() {
    guarded(1, "split-cp coverage band", split_cp_band);

    DispersionRun run;
    bool have_run = false;
    std::string run_error;
    try {
        run = dispersion_run();
        have_run = true;
    } catch (const std::exception& e) {
        run_error = e.what();
    }
    auto with_run = [&](std::function<Outcome(const DispersionRun&)> fn) {
        return [&, fn] { return have_run ? fn(run) : Outcome{false, "dataset failed: " + run_error}; };
    };
    guarded(2, "under-dispersion reproduction", with_run(under_dispersion));
    guarded(3, "cqr correction", with_run(cqr_correction));
    guarded(4, "interval/quantile score identity", metric_identity);
    guarded(5, "empirical quantile oracle", quantile_oracle);
    guarded(6, "oracle convergence", oracle_convergence);
    guarded(7, "direction of scores", with_run(score_direction));
    guarded(8, "determinism", determinism);

    std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
