// gridcp: synthetic data, conformal calibration and evaluation of gridded ensemble intervals.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gridcp/pipeline/config.hpp"
#include "gridcp/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace gridcp;
using namespace gridcp::pipeline;

namespace {

struct Flags {
    std::string config;
    std::string method;
    std::vector<double> levels;
    std::size_t jobs = 0;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string data;
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--method", f.method, "raw | split-cp | cqr");
    sub->add_option("--level", f.levels, "coverage level in (0,1); repeatable");
    sub->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", f.seed, "synthetic noise seed");
    sub->add_option("--out", f.out, "output directory (dataset directory for synth unless --data is given)");
    sub->add_option("--data", f.data, "dataset directory");
}

PipelineConfig resolve(const Flags& f) {
    PipelineConfig cfg = f.config.empty() ? PipelineConfig{} : load_config(f.config);
    if (!f.method.empty()) {
        try {
            cfg.method = provenance_from_string(f.method);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (!f.levels.empty()) {
        try {
            cfg.scheme = LevelScheme::from_coverage(f.levels);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--level: ") + e.what());
        }
    }
    if (f.jobs > 0) cfg.jobs = f.jobs;
    if (f.seed) {
        if (!cfg.synth) cfg.synth = synth::SynthConfig{};
        cfg.synth->noise_seed = *f.seed;
    }
    if (!f.data.empty()) cfg.dataset_dir = f.data;
    if (!f.out.empty()) cfg.output_dir = f.out;
    cfg.validate();
    return cfg;
}

void print_report(const MetricReport& r) {
    std::cout << "method " << to_string(r.provenance) << ": " << r.test_records << " test records, " << r.valid_points
              << " valid points\n";
    for (const auto& l : r.levels) {
        std::cout << "  level " << level_key(l.coverage) << "  PICP " << l.mean_picp << "  dev% " << l.pct_deviation
                  << "  IS " << l.mean_is << "  IW " << l.mean_iw << '\n';
    }
}

int run(const std::string& name, const Flags& f) {
    PipelineConfig cfg = resolve(f);
    if (name == "synth") {
        const fs::path dir = f.out.empty() || !f.data.empty() ? cfg.dataset_dir : fs::path(f.out);
        if (!cfg.synth) cfg.synth = synth::SynthConfig{};
        std::cout << "wrote " << run_synth(cfg, dir) << " records to " << dir.string() << '\n';
    } else if (name == "quantiles") {
        std::cout << "computed quantiles for " << run_quantiles(cfg) << " records\n";
    } else if (name == "calibrate") {
        const auto off = run_calibrate(cfg);
        std::cout << "calibrated " << to_string(off.method) << " on " << off.calibration_size << " records\n";
    } else if (name == "apply") {
        std::cout << "wrote intervals for " << run_apply(cfg) << " test records\n";
    } else if (name == "evaluate") {
        print_report(run_evaluate(cfg));
    } else if (name == "coverage-sim") {
        if (!cfg.synth) cfg.synth = synth::SynthConfig{};
        const CoverageStudy study = run_coverage_study(cfg);
        write_coverage_study(cfg.output_dir / "coverage" / to_string(cfg.method), study, config_to_json(cfg));
        for (const auto& s : study.summary) {
            std::cout << "  level " << level_key(s.level) << "  coverage " << s.mean << " +- " << s.standard_error
                      << "  band [" << s.band_lower << ", " << s.band_upper << "]"
                      << (s.within_band ? "" : "  VIOLATION") << '\n';
        }
        if (!study.within_band()) return 3;
    } else if (name == "report") {
        std::cout << "compared " << run_report(cfg) << " method reports\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal prediction intervals for gridded ensemble forecasts"};
    app.require_subcommand(1);
    Flags flags;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"synth", "generate a synthetic paired dataset"},
        {"quantiles", "compute quantile grids from stored ensembles"},
        {"calibrate", "compute conformal offsets on the calibration split"},
        {"apply", "write calibrated intervals for the test split"},
        {"evaluate", "score the test split for one method"},
        {"coverage-sim", "repeat calibration on fresh synthetic data and check coverage"},
        {"report", "compare evaluated methods"},
    };
    for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        return run(app.get_subcommands().front()->get_name(), flags);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
