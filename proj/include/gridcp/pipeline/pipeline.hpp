#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "json.hpp"

#include "gridcp/conformal.hpp"
#include "gridcp/metrics.hpp"
#include "gridcp/pipeline/config.hpp"

namespace gridcp::pipeline {

/// Generates n_calibration + n_test synthetic records (calibration first) into `dataset_dir`.
std::size_t run_synth(const PipelineConfig& cfg, const std::filesystem::path& dataset_dir);

/// Computes quantile grids for every record that carries an ensemble.
std::size_t run_quantiles(const PipelineConfig& cfg);

/// Calibrates on the calibration split and writes <output_dir>/offsets.
ConformalOffsets run_calibrate(const PipelineConfig& cfg);

/// Applies stored offsets to the test split, writing <output_dir>/intervals/<record>.
std::size_t run_apply(const PipelineConfig& cfg);

/// Scores the test split for cfg.method and writes <output_dir>/report/<method>.
MetricReport run_evaluate(const PipelineConfig& cfg);

/// Combines every method report under <output_dir>/report into <output_dir>/report/comparison.
std::size_t run_report(const PipelineConfig& cfg);

struct LevelCoverage {
    double level = 0.0;
    double mean = 0.0;
    /// Binomial standard error over trials x valid points.
    double standard_error = 0.0;
    double band_lower = 0.0;
    double band_upper = 0.0;
    double mean_below = 0.0;
    double mean_above = 0.0;
    bool within_band = false;
};

struct CoverageStudy {
    Provenance method = Provenance::split_cp;
    std::size_t n_calibration = 0;
    std::size_t n_test = 0;
    std::size_t valid_points = 0;
    std::vector<double> levels;
    /// Indexed [trial][level].
    std::vector<std::vector<double>> coverage;
    std::vector<std::vector<double>> below;
    std::vector<std::vector<double>> above;
    std::vector<LevelCoverage> summary;

    bool within_band() const;
};

/**
 * Repeats fresh-dataset calibration and testing `trial_count` times and checks
 * the aggregate coverage against [1-alpha, 1-alpha + s/(n+1)] widened by three
 * standard errors, with s = 1 for split CP and raw intervals and s = 2 for CQR
 * (one rank of slack per tail).
 */
CoverageStudy run_coverage_study(const PipelineConfig& cfg);

/// coverage_trials.csv, coverage_summary.csv and coverage_summary.json.
void write_coverage_study(const std::filesystem::path& dir, const CoverageStudy& study,
                          const nlohmann::json& config_echo);

}  // namespace gridcp::pipeline
