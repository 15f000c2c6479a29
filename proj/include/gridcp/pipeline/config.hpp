#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>

#include "json.hpp"

#include "gridcp/conformal.hpp"
#include "gridcp/grid.hpp"
#include "gridcp/synth.hpp"

namespace gridcp::pipeline {

/// Bad flags, bad config values; maps to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PipelineConfig {
    std::filesystem::path dataset_dir = "data";
    std::filesystem::path output_dir = "out";
    LevelScheme scheme = default_levels();
    std::size_t n_calibration = 730;
    std::size_t n_test = 730;
    Provenance method = Provenance::cqr;
    std::optional<synth::SynthConfig> synth;
    /// When false, `synth` writes quantile grids instead of full ensembles.
    bool store_ensembles = true;
    std::size_t trial_count = 200;
    std::size_t jobs = 1;

    void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc);
PipelineConfig load_config(const std::filesystem::path& path);

nlohmann::json synth_to_json(const synth::SynthConfig& cfg);
synth::SynthConfig synth_from_json(const nlohmann::json& doc);

/// Full echo of every setting. Paths are omitted so that outputs do not
/// depend on where a run was placed.
nlohmann::json config_to_json(const PipelineConfig& cfg);

}  // namespace gridcp::pipeline
