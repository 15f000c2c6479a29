#include "gridcp/pipeline/dataset_store.hpp"

#include "gridcp/artifact_io.hpp"
#include "gridcp/grid_io.hpp"

namespace gridcp::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

CoarseField coarse_from_grid(const GridField& g) {
    return CoarseField{g.height(), g.width(), std::vector<double>(g.values().begin(), g.values().end())};
}

GridField coarse_to_grid(const CoarseField& c) { return GridField(c.height, c.width, c.values); }

DatasetStore::DatasetStore(fs::path root) : root_(std::move(root)) {
    if (!fs::exists(root_ / kManifest)) throw DataError("dataset manifest missing: " + (root_ / kManifest).string());
    manifest_ = io::read_json(root_ / kManifest);
    if (!manifest_.contains("records") || !manifest_.at("records").is_array()) {
        throw DataError("dataset manifest has no record list");
    }
    for (const auto& r : manifest_.at("records")) {
        RecordEntry e;
        e.id = r.at("id").get<std::string>();
        e.split = split_from_string(r.at("split").get<std::string>());
        const auto& files = r.at("files");
        e.coarse = files.at("coarse").get<std::string>();
        e.truth = files.at("truth").get<std::string>();
        if (files.contains("deterministic")) e.deterministic = files.at("deterministic").get<std::string>();
        if (files.contains("ensemble")) e.ensemble = files.at("ensemble").get<std::string>();
        records_.push_back(std::move(e));
    }
}

std::vector<std::size_t> DatasetStore::split_indices(SplitTag split) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].split == split) idx.push_back(i);
    }
    return idx;
}

CoarseField DatasetStore::coarse(std::size_t i) const { return coarse_from_grid(io::read_cgf(root_ / records_.at(i).coarse)); }

GridField DatasetStore::truth(std::size_t i) const { return io::read_cgf(root_ / records_.at(i).truth); }

std::optional<GridField> DatasetStore::deterministic(std::size_t i) const {
    const auto& e = records_.at(i);
    if (!e.deterministic) return std::nullopt;
    return io::read_cgf(root_ / *e.deterministic);
}

std::optional<EnsembleBatch> DatasetStore::ensemble(std::size_t i) const {
    const auto& e = records_.at(i);
    if (!e.ensemble) return std::nullopt;
    return EnsembleBatch{io::read_cgf_stack(root_ / *e.ensemble)};
}

fs::path DatasetStore::quantile_dir(std::size_t i) const { return root_ / "records" / records_.at(i).id / "quantiles"; }

bool DatasetStore::has_quantiles(std::size_t i) const { return fs::exists(quantile_dir(i) / "index.json"); }

QuantileGridSet DatasetStore::quantiles(std::size_t i, const LevelScheme& scheme) const {
    std::string missing;
    if (has_quantiles(i)) {
        QuantileGridSet q = io::read_quantile_set(quantile_dir(i));
        bool covers = true;
        for (double g : scheme.quantile_levels()) {
            bool found = false;
            for (double l : q.levels) found = found || same_level(l, g);
            if (!found) {
                covers = false;
                missing += (missing.empty() ? "" : ", ") + level_key(g);
            }
        }
        if (covers) return q;
    }
    if (auto ens = ensemble(i)) return ensemble_to_quantiles(*ens, scheme);
    if (!missing.empty()) {
        throw DataError("record " + records_.at(i).id + ": stored quantiles lack levels " + missing +
                        " and no ensemble is available");
    }
    throw DataError("record " + records_.at(i).id + ": neither ensemble nor quantiles present");
}

void DatasetStore::write_manifest(const fs::path& root, const std::vector<RecordEntry>& records, const json& extra) {
    json list = json::array();
    for (const auto& e : records) {
        json files{{"coarse", e.coarse.generic_string()}, {"truth", e.truth.generic_string()}};
        if (e.deterministic) files["deterministic"] = e.deterministic->generic_string();
        if (e.ensemble) files["ensemble"] = e.ensemble->generic_string();
        list.push_back(json{{"id", e.id}, {"split", to_string(e.split)}, {"files", files}});
    }
    json doc = extra;
    doc["format"] = "gridcp-dataset";
    doc["version"] = 1;
    doc["records"] = list;
    io::write_json(root / kManifest, doc);
}

}  // namespace gridcp::pipeline
