#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridcp/grid.hpp"
#include "gridcp/quantiles.hpp"

namespace gridcp::pipeline {

struct RecordEntry {
    std::string id;
    SplitTag split = SplitTag::calibration;
    std::filesystem::path coarse;
    std::filesystem::path truth;
    std::optional<std::filesystem::path> deterministic;
    std::optional<std::filesystem::path> ensemble;
};

/**
 * A paired dataset on disk:
 *
 *   manifest.json                       config echo, seeds, record list
 *   records/<id>/coarse.cgf truth.cgf   CGF1 grids
 *   records/<id>/deterministic.cgf      optional point prediction
 *   records/<id>/ensemble.cgf           optional, M stacked CGF1 members
 *   records/<id>/quantiles/index.json   optional precomputed quantile grids
 *
 * Paths in the manifest are relative to the dataset root.
 */
class DatasetStore {
public:
    explicit DatasetStore(std::filesystem::path root);

    static constexpr const char* kManifest = "manifest.json";

    const std::filesystem::path& root() const { return root_; }
    const nlohmann::json& manifest() const { return manifest_; }
    const std::vector<RecordEntry>& records() const { return records_; }
    std::vector<std::size_t> split_indices(SplitTag split) const;

    CoarseField coarse(std::size_t i) const;
    GridField truth(std::size_t i) const;
    std::optional<GridField> deterministic(std::size_t i) const;
    std::optional<EnsembleBatch> ensemble(std::size_t i) const;

    std::filesystem::path quantile_dir(std::size_t i) const;
    bool has_quantiles(std::size_t i) const;
    /// Stored quantiles when they cover every scheme level, else computed from the ensemble.
    QuantileGridSet quantiles(std::size_t i, const LevelScheme& scheme) const;

    /// Writes the manifest for `records`; record files are written separately.
    static void write_manifest(const std::filesystem::path& root, const std::vector<RecordEntry>& records,
                               const nlohmann::json& extra);

private:
    std::filesystem::path root_;
    nlohmann::json manifest_;
    std::vector<RecordEntry> records_;
};

CoarseField coarse_from_grid(const GridField& g);
GridField coarse_to_grid(const CoarseField& c);

}  // namespace gridcp::pipeline
