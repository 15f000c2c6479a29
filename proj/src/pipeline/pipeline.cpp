#include "gridcp/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridcp/artifact_io.hpp"
#include "gridcp/grid_io.hpp"
#include "gridcp/parallel.hpp"
#include "gridcp/pipeline/dataset_store.hpp"
#include "gridcp/pipeline/report_writer.hpp"
#include "gridcp/quantiles.hpp"
#include "gridcp/synth.hpp"

namespace gridcp::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string record_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "r%05zu", i);
    return buf;
}

fs::path offsets_dir(const PipelineConfig& cfg) { return cfg.output_dir / "offsets"; }

std::vector<std::size_t> require_split(const DatasetStore& store, SplitTag split) {
    auto idx = store.split_indices(split);
    if (idx.empty()) {
        throw DataError("dataset " + store.root().string() + " has no " + to_string(split) + " split");
    }
    return idx;
}

std::vector<GridField> load_truths(const DatasetStore& store, const std::vector<std::size_t>& idx,
                                   std::size_t jobs) {
    std::vector<GridField> out(idx.size());
    parallel_for(idx.size(), jobs, [&](std::size_t k) { out[k] = store.truth(idx[k]); });
    return out;
}

std::vector<GridField> load_predictions(const DatasetStore& store, const std::vector<std::size_t>& idx,
                                        std::size_t jobs) {
    std::vector<GridField> out(idx.size());
    parallel_for(idx.size(), jobs, [&](std::size_t k) {
        auto det = store.deterministic(idx[k]);
        if (!det) throw DataError("record " + store.records()[idx[k]].id + ": missing deterministic prediction");
        out[k] = std::move(*det);
    });
    return out;
}

std::vector<QuantileGridSet> load_quantiles(const DatasetStore& store, const std::vector<std::size_t>& idx,
                                            const LevelScheme& scheme, std::size_t jobs) {
    std::vector<QuantileGridSet> out(idx.size());
    parallel_for(idx.size(), jobs, [&](std::size_t k) { out[k] = store.quantiles(idx[k], scheme); });
    return out;
}

void require_offset_levels(const ConformalOffsets& off, const LevelScheme& scheme) {
    std::string missing;
    for (double c : scheme.coverage_levels()) {
        bool found = false;
        for (double l : off.coverage_levels) found = found || same_level(l, c);
        if (!found) missing += (missing.empty() ? "" : ", ") + level_key(c);
    }
    if (!missing.empty()) throw DataError("offsets lack coverage levels " + missing);
}

// Lists every artifact the test split is missing for `method`.
void check_test_artifacts(const PipelineConfig& cfg, const DatasetStore& store, const std::vector<std::size_t>& idx) {
    std::vector<std::string> missing;
    if (cfg.method != Provenance::raw_quantile && !fs::exists(offsets_dir(cfg) / "manifest.json")) {
        missing.push_back((offsets_dir(cfg) / "manifest.json").string() + " (run calibrate first)");
    }
    for (std::size_t i : idx) {
        const auto& rec = store.records()[i];
        if (!fs::exists(store.root() / rec.truth)) missing.push_back((store.root() / rec.truth).string());
        if (cfg.method == Provenance::split_cp) {
            if (!rec.deterministic) missing.push_back(rec.id + ": deterministic prediction");
        } else if (!rec.ensemble && !store.has_quantiles(i)) {
            missing.push_back(rec.id + ": ensemble or quantiles");
        }
    }
    if (!missing.empty()) {
        std::ostringstream os;
        os << "missing artifacts:";
        for (const auto& m : missing) os << "\n  " << m;
        throw DataError(os.str());
    }
}

ConformalOffsets load_offsets_for(const PipelineConfig& cfg) {
    ConformalOffsets off = io::read_offsets(offsets_dir(cfg));
    if (off.method != cfg.method) {
        throw DataError("offsets in " + offsets_dir(cfg).string() + " were calibrated with method " +
                        to_string(off.method) + ", not " + to_string(cfg.method));
    }
    require_offset_levels(off, cfg.scheme);
    return off;
}

std::vector<IntervalGridSet> test_intervals(const PipelineConfig& cfg, const DatasetStore& store,
                                            const std::vector<std::size_t>& idx, const ConformalOffsets* off,
                                            std::vector<QuantileGridSet>* quantiles_out) {
    std::vector<IntervalGridSet> out(idx.size());
    if (cfg.method == Provenance::split_cp) {
        const auto preds = load_predictions(store, idx, cfg.jobs);
        for (std::size_t k = 0; k < idx.size(); ++k) out[k] = apply_split_cp(preds[k], *off, cfg.scheme);
        return out;
    }
    auto q = load_quantiles(store, idx, cfg.scheme, cfg.jobs);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out[k] = cfg.method == Provenance::cqr ? apply_offsets(q[k], *off, cfg.scheme) : raw_intervals(q[k], cfg.scheme);
    }
    if (quantiles_out) *quantiles_out = std::move(q);
    return out;
}

}  // namespace

std::size_t run_synth(const PipelineConfig& cfg, const fs::path& dataset_dir) {
    if (!cfg.synth) throw UsageError("synth requires a 'synth' section in the config");
    const synth::SyntheticDomain domain(*cfg.synth);
    const std::size_t total = cfg.n_calibration + cfg.n_test;
    fs::create_directories(dataset_dir / "records");

    std::vector<RecordEntry> entries(total);
    parallel_for(total, cfg.jobs, [&](std::size_t i) {
        const synth::SyntheticRecord rec = synth::draw_record(domain, 0, i, true);
        RecordEntry& e = entries[i];
        e.id = record_id(i);
        e.split = i < cfg.n_calibration ? SplitTag::calibration : SplitTag::test;
        const fs::path rel = fs::path("records") / e.id;
        fs::create_directories(dataset_dir / rel);
        e.coarse = rel / "coarse.cgf";
        e.truth = rel / "truth.cgf";
        e.deterministic = rel / "deterministic.cgf";
        io::write_cgf(dataset_dir / e.coarse, coarse_to_grid(rec.coarse));
        io::write_cgf(dataset_dir / e.truth, rec.truth);
        io::write_cgf(dataset_dir / *e.deterministic, rec.deterministic);
        if (cfg.store_ensembles) {
            e.ensemble = rel / "ensemble.cgf";
            io::write_cgf_stack(dataset_dir / *e.ensemble, rec.ensemble.members);
        } else {
            io::write_quantile_set(dataset_dir / rel / "quantiles", ensemble_to_quantiles(rec.ensemble, cfg.scheme));
        }
    });

    json extra{{"config", config_to_json(cfg)},
               {"seeds", {{"elevation_seed", cfg.synth->elevation_seed}, {"noise_seed", cfg.synth->noise_seed}}},
               {"layout", {{"height", domain.layout().height()}, {"width", domain.layout().width()}}},
               {"split_sizes", {{"calibration", cfg.n_calibration}, {"test", cfg.n_test}}}};
    DatasetStore::write_manifest(dataset_dir, entries, extra);
    return total;
}

std::size_t run_quantiles(const PipelineConfig& cfg) {
    const DatasetStore store(cfg.dataset_dir);
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < store.records().size(); ++i) {
        if (!store.records()[i].ensemble) missing.push_back(store.records()[i].id);
    }
    if (!missing.empty()) {
        throw DataError("records without ensembles (first: " + missing.front() + "), " +
                        std::to_string(missing.size()) + " total");
    }
    parallel_for(store.records().size(), cfg.jobs, [&](std::size_t i) {
        io::write_quantile_set(store.quantile_dir(i), ensemble_to_quantiles(*store.ensemble(i), cfg.scheme));
    });
    return store.records().size();
}

ConformalOffsets run_calibrate(const PipelineConfig& cfg) {
    if (cfg.method == Provenance::raw_quantile) throw UsageError("method raw needs no calibration");
    const DatasetStore store(cfg.dataset_dir);
    const auto idx = require_split(store, SplitTag::calibration);
    const auto truths = load_truths(store, idx, cfg.jobs);

    ConformalOffsets off;
    if (cfg.method == Provenance::split_cp) {
        off = calibrate_split_cp(load_predictions(store, idx, cfg.jobs), truths, cfg.scheme, cfg.jobs);
    } else {
        off = calibrate_cqr(load_quantiles(store, idx, cfg.scheme, cfg.jobs), truths, cfg.scheme, cfg.jobs);
    }
    fs::create_directories(cfg.output_dir);
    io::write_offsets(offsets_dir(cfg), off, json{{"config", config_to_json(cfg)}});
    return off;
}

std::size_t run_apply(const PipelineConfig& cfg) {
    if (cfg.method == Provenance::raw_quantile) throw UsageError("method raw has no offsets to apply");
    const DatasetStore store(cfg.dataset_dir);
    const auto idx = require_split(store, SplitTag::test);
    check_test_artifacts(cfg, store, idx);
    const ConformalOffsets off = load_offsets_for(cfg);
    const auto intervals = test_intervals(cfg, store, idx, &off, nullptr);
    parallel_for(idx.size(), cfg.jobs, [&](std::size_t k) {
        io::write_intervals(cfg.output_dir / "intervals" / store.records()[idx[k]].id, intervals[k]);
    });
    return idx.size();
}

MetricReport run_evaluate(const PipelineConfig& cfg) {
    const DatasetStore store(cfg.dataset_dir);
    const auto idx = require_split(store, SplitTag::test);
    check_test_artifacts(cfg, store, idx);

    std::optional<ConformalOffsets> off;
    if (cfg.method != Provenance::raw_quantile) off = load_offsets_for(cfg);
    std::vector<QuantileGridSet> quantiles;
    const auto intervals = test_intervals(cfg, store, idx, off ? &*off : nullptr, &quantiles);
    const auto truths = load_truths(store, idx, cfg.jobs);

    MetricReport report = evaluate(intervals, quantiles, truths, cfg.scheme, cfg.jobs);
    write_report(cfg.output_dir / "report" / to_string(cfg.method), report, config_to_json(cfg));
    return report;
}

std::size_t run_report(const PipelineConfig& cfg) {
    const fs::path base = cfg.output_dir / "report";
    std::vector<json> summaries;
    for (Provenance p : {Provenance::raw_quantile, Provenance::split_cp, Provenance::cqr}) {
        const fs::path s = base / to_string(p) / "summary.json";
        if (fs::exists(s)) summaries.push_back(io::read_json(s));
    }
    if (summaries.empty()) throw DataError("no method reports under " + base.string() + " (run evaluate first)");
    write_comparison(base / "comparison", summaries);
    return summaries.size();
}

bool CoverageStudy::within_band() const {
    return std::all_of(summary.begin(), summary.end(), [](const LevelCoverage& l) { return l.within_band; });
}

CoverageStudy run_coverage_study(const PipelineConfig& cfg) {
    if (!cfg.synth) throw UsageError("coverage-sim requires a 'synth' section in the config");
    const synth::SyntheticDomain domain(*cfg.synth);
    const std::size_t n = cfg.n_calibration;
    const std::size_t n_test = cfg.n_test;
    const bool need_ensemble = cfg.method != Provenance::split_cp;
    const auto& levels = cfg.scheme.coverage_levels();

    CoverageStudy study;
    study.method = cfg.method;
    study.n_calibration = n;
    study.n_test = n_test;
    study.valid_points = domain.layout().valid_count();
    study.levels = levels;
    study.coverage.assign(cfg.trial_count, std::vector<double>(levels.size()));
    study.below = study.coverage;
    study.above = study.coverage;

    parallel_for(cfg.trial_count, cfg.jobs, [&](std::size_t t) {
        const std::uint64_t family = t + 1;
        auto draw = [&](std::size_t i, std::vector<GridField>& truths, std::vector<GridField>& preds,
                        std::vector<QuantileGridSet>& qs) {
            synth::SyntheticRecord rec = synth::draw_record(domain, family, i, need_ensemble);
            truths.push_back(std::move(rec.truth));
            if (need_ensemble) {
                qs.push_back(ensemble_to_quantiles(rec.ensemble, cfg.scheme));
            } else {
                preds.push_back(std::move(rec.deterministic));
            }
        };

        std::vector<GridField> cal_truth, cal_pred, test_truth, test_pred;
        std::vector<QuantileGridSet> cal_q, test_q;
        if (cfg.method != Provenance::raw_quantile) {
            for (std::size_t i = 0; i < n; ++i) draw(i, cal_truth, cal_pred, cal_q);
        }
        for (std::size_t i = 0; i < n_test; ++i) draw(n + i, test_truth, test_pred, test_q);

        std::vector<IntervalGridSet> intervals;
        intervals.reserve(n_test);
        if (cfg.method == Provenance::split_cp) {
            const auto off = calibrate_split_cp(cal_pred, cal_truth, cfg.scheme);
            for (const auto& p : test_pred) intervals.push_back(apply_split_cp(p, off, cfg.scheme));
        } else if (cfg.method == Provenance::cqr) {
            const auto off = calibrate_cqr(cal_q, cal_truth, cfg.scheme);
            for (const auto& q : test_q) intervals.push_back(apply_offsets(q, off, cfg.scheme));
        } else {
            for (const auto& q : test_q) intervals.push_back(raw_intervals(q, cfg.scheme));
        }
        const MetricReport report = evaluate(intervals, test_q, test_truth, cfg.scheme);
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const auto& m = report.level(levels[l]);
            study.coverage[t][l] = m.mean_picp;
            study.below[t][l] = m.mean_below;
            study.above[t][l] = m.mean_above;
        }
    });

    const double trials = static_cast<double>(cfg.trial_count);
    const double units = trials * static_cast<double>(study.valid_points);
    const double slack = cfg.method == Provenance::cqr ? 2.0 : 1.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        LevelCoverage s;
        s.level = levels[l];
        for (std::size_t t = 0; t < cfg.trial_count; ++t) {
            s.mean += study.coverage[t][l];
            s.mean_below += study.below[t][l];
            s.mean_above += study.above[t][l];
        }
        s.mean /= trials;
        s.mean_below /= trials;
        s.mean_above /= trials;
        s.standard_error = std::sqrt(s.mean * (1.0 - s.mean) / units);
        s.band_lower = levels[l];
        s.band_upper = std::min(1.0, levels[l] + slack / static_cast<double>(n + 1));
        // Without a finite rank the interval is the whole line.
        const double rank_level = cfg.method == Provenance::cqr ? tail_levels(levels[l]).second : levels[l];
        if (cfg.method != Provenance::raw_quantile && conformal_rank(n, rank_level) > n) s.band_upper = 1.0;
        const double tol = 3.0 * s.standard_error;
        s.within_band = s.mean >= s.band_lower - tol && s.mean <= s.band_upper + tol;
        study.summary.push_back(s);
    }
    return study;
}

void write_coverage_study(const fs::path& dir, const CoverageStudy& study, const json& config_echo) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "coverage_trials.csv", std::ios::trunc | std::ios::binary);
        if (!out) throw DataError("cannot write " + (dir / "coverage_trials.csv").string());
        out << "trial,level,coverage,below,above\n";
        for (std::size_t t = 0; t < study.coverage.size(); ++t) {
            for (std::size_t l = 0; l < study.levels.size(); ++l) {
                out << t << ',' << level_key(study.levels[l]) << ',' << format_cell(study.coverage[t][l]) << ','
                    << format_cell(study.below[t][l]) << ',' << format_cell(study.above[t][l]) << '\n';
            }
        }
    }
    std::ofstream out(dir / "coverage_summary.csv", std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "coverage_summary.csv").string());
    out << "level,mean_coverage,binomial_se,band_lower,band_upper,mean_below,mean_above,within_band\n";
    json levels = json::array();
    for (const auto& s : study.summary) {
        out << level_key(s.level) << ',' << format_cell(s.mean) << ',' << format_cell(s.standard_error) << ','
            << format_cell(s.band_lower) << ',' << format_cell(s.band_upper) << ',' << format_cell(s.mean_below)
            << ',' << format_cell(s.mean_above) << ',' << (s.within_band ? "true" : "false") << '\n';
        levels.push_back(json{{"level", s.level},
                              {"mean_coverage", s.mean},
                              {"binomial_se", s.standard_error},
                              {"band_lower", s.band_lower},
                              {"band_upper", s.band_upper},
                              {"mean_below", s.mean_below},
                              {"mean_above", s.mean_above},
                              {"within_band", s.within_band}});
    }
    io::write_json(dir / "coverage_summary.json", json{{"method", to_string(study.method)},
                                                       {"trials", study.coverage.size()},
                                                       {"n_calibration", study.n_calibration},
                                                       {"n_test", study.n_test},
                                                       {"valid_points", study.valid_points},
                                                       {"within_band", study.within_band()},
                                                       {"levels", levels},
                                                       {"config", config_echo}});
}

}  // namespace gridcp::pipeline
