#include "gridcp/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <string>

namespace gridcp::pipeline {

using nlohmann::json;

namespace {

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) throw UsageError("unknown config key '" + key + "' in " + where);
    }
}

template <typename T>
void read_if(const json& doc, const char* key, T& dst) {
    if (!doc.contains(key)) return;
    try {
        dst = doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

void PipelineConfig::validate() const {
    if (n_calibration < 1) throw UsageError("n_calibration must be at least 1");
    if (n_test < 1) throw UsageError("n_test must be at least 1");
    if (trial_count < 1) throw UsageError("trial_count must be at least 1");
    if (jobs < 1) throw UsageError("jobs must be at least 1");
    if (synth) {
        try {
            synth->validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("synth: ") + e.what());
        }
    }
}

json synth_to_json(const synth::SynthConfig& cfg) {
    return json{{"coarse_height", cfg.coarse_height},
                {"coarse_width", cfg.coarse_width},
                {"upscale_factor", cfg.upscale_factor},
                {"elevation_seed", cfg.elevation_seed},
                {"noise_seed", cfg.noise_seed},
                {"base_sigma", cfg.base_sigma},
                {"heterosc_gain", cfg.heterosc_gain},
                {"skew", cfg.skew},
                {"dispersion", cfg.dispersion},
                {"member_count", cfg.member_count},
                {"sample_rows", cfg.sample_rows},
                {"sample_cols", cfg.sample_cols}};
}

synth::SynthConfig synth_from_json(const json& doc) {
    if (!doc.is_object()) throw UsageError("synth config must be an object");
    reject_unknown(doc,
                   {"coarse_height", "coarse_width", "upscale_factor", "elevation_seed", "noise_seed", "base_sigma",
                    "heterosc_gain", "skew", "dispersion", "member_count", "sample_rows", "sample_cols"},
                   "synth");
    synth::SynthConfig cfg;
    read_if(doc, "coarse_height", cfg.coarse_height);
    read_if(doc, "coarse_width", cfg.coarse_width);
    read_if(doc, "upscale_factor", cfg.upscale_factor);
    read_if(doc, "elevation_seed", cfg.elevation_seed);
    read_if(doc, "noise_seed", cfg.noise_seed);
    read_if(doc, "base_sigma", cfg.base_sigma);
    read_if(doc, "heterosc_gain", cfg.heterosc_gain);
    read_if(doc, "skew", cfg.skew);
    read_if(doc, "dispersion", cfg.dispersion);
    read_if(doc, "member_count", cfg.member_count);
    read_if(doc, "sample_rows", cfg.sample_rows);
    read_if(doc, "sample_cols", cfg.sample_cols);
    return cfg;
}

PipelineConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw UsageError("config must be a JSON object");
    reject_unknown(doc,
                   {"dataset_dir", "output_dir", "coverage_levels", "quantile_levels", "n_calibration", "n_test",
                    "method", "synth", "store_ensembles", "trial_count", "jobs"},
                   "config");
    PipelineConfig cfg;
    std::string path;
    if (doc.contains("dataset_dir")) {
        read_if(doc, "dataset_dir", path);
        cfg.dataset_dir = path;
    }
    if (doc.contains("output_dir")) {
        read_if(doc, "output_dir", path);
        cfg.output_dir = path;
    }

    std::vector<double> coverage = cfg.scheme.coverage_levels();
    std::optional<std::vector<double>> quantile;
    read_if(doc, "coverage_levels", coverage);
    if (doc.contains("quantile_levels")) {
        quantile.emplace();
        read_if(doc, "quantile_levels", *quantile);
    }
    try {
        if (quantile) {
            cfg.scheme = LevelScheme(coverage, *quantile);
        } else if (doc.contains("coverage_levels")) {
            cfg.scheme = LevelScheme::from_coverage(coverage);
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("levels: ") + e.what());
    }

    read_if(doc, "n_calibration", cfg.n_calibration);
    read_if(doc, "n_test", cfg.n_test);
    if (doc.contains("method")) {
        std::string method;
        read_if(doc, "method", method);
        try {
            cfg.method = provenance_from_string(method);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (doc.contains("synth") && !doc.at("synth").is_null()) cfg.synth = synth_from_json(doc.at("synth"));
    read_if(doc, "store_ensembles", cfg.store_ensembles);
    read_if(doc, "trial_count", cfg.trial_count);
    read_if(doc, "jobs", cfg.jobs);
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

json config_to_json(const PipelineConfig& cfg) {
    json doc{{"coverage_levels", cfg.scheme.coverage_levels()},
             {"quantile_levels", cfg.scheme.quantile_levels()},
             {"n_calibration", cfg.n_calibration},
             {"n_test", cfg.n_test},
             {"method", to_string(cfg.method)},
             {"store_ensembles", cfg.store_ensembles},
             {"trial_count", cfg.trial_count}};
    doc["synth"] = cfg.synth ? synth_to_json(*cfg.synth) : json(nullptr);
    return doc;
}

}  // namespace gridcp::pipeline
