#include "gridcp/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace gridcp {

GridLayout::GridLayout(std::size_t height, std::size_t width, std::optional<Mask> mask)
    : height_(height), width_(width), mask_(std::move(mask)) {
    if (height == 0 || width == 0) {
        throw DataError("grid dimensions must be positive");
    }
    if (mask_ && mask_->size() != height * width) {
        throw DataError("mask dimensions do not match grid dimensions");
    }
    if (mask_) {
        for (auto& m : *mask_) m = m ? 1 : 0;
    }
}

std::size_t GridLayout::valid_count() const {
    if (!mask_) return size();
    return static_cast<std::size_t>(std::count(mask_->begin(), mask_->end(), std::uint8_t{1}));
}

GridField::GridField(GridLayout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
    if (values_.size() != layout_.size()) {
        throw DataError("value count does not match grid dimensions");
    }
}

GridField::GridField(std::size_t height, std::size_t width, std::vector<double> values,
                     std::optional<Mask> mask)
    : GridField(GridLayout(height, width, std::move(mask)), std::move(values)) {}

GridField GridField::filled(const GridLayout& layout, double value) {
    return GridField(layout, std::vector<double>(layout.size(), value));
}

std::size_t GridField::non_finite_count() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (valid(i) && !std::isfinite(values_[i])) ++count;
    }
    return count;
}

std::optional<std::string> EnsembleBatch::consistency_error() const {
    if (members.empty()) return "empty ensemble";
    const GridLayout& ref = members.front().layout();
    for (const auto& m : members) {
        if (!m.layout().same_dims(ref)) return "ensemble member dimension mismatch";
        if (m.layout().mask() != ref.mask()) return "ensemble member mask mismatch";
    }
    return std::nullopt;
}

bool same_level(double a, double b) { return std::abs(a - b) <= LevelScheme::kLevelTolerance; }

std::string level_key(double level) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), level);
    return std::string(buf, res.ptr);
}

namespace {

void require_open_unit_increasing(const std::vector<double>& levels, const char* what) {
    if (levels.empty()) {
        throw std::invalid_argument(std::string(what) + " levels must not be empty");
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0)) {
            throw std::invalid_argument(std::string(what) + " level outside (0,1)");
        }
        if (i > 0 && !(levels[i] > levels[i - 1] + LevelScheme::kLevelTolerance)) {
            throw std::invalid_argument(std::string(what) + " levels must be strictly increasing");
        }
    }
}

std::optional<std::size_t> find_level(const std::vector<double>& levels, double level) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (same_level(levels[i], level)) return i;
    }
    return std::nullopt;
}

std::string format_level(double level) { return level_key(std::round(level * 1e9) / 1e9); }

double canonical_level(double level) { return std::round(level * 1e9) / 1e9; }

}  // namespace

LevelScheme::LevelScheme(std::vector<double> coverage_levels, std::vector<double> quantile_levels)
    : coverage_(std::move(coverage_levels)), quantile_(std::move(quantile_levels)) {
    require_open_unit_increasing(coverage_, "coverage");
    require_open_unit_increasing(quantile_, "quantile");
    for (double c : coverage_) {
        auto [lo, hi] = tail_levels(c);
        if (!find_quantile(lo) || !find_quantile(hi)) {
            throw std::invalid_argument("coverage level " + format_level(c) +
                                        " requires quantile levels " + format_level(lo) +
                                        " and " + format_level(hi));
        }
    }
}

LevelScheme LevelScheme::from_coverage(std::vector<double> coverage_levels) {
    std::vector<double> q;
    for (double c : coverage_levels) {
        auto [lo, hi] = tail_levels(c);
        q.push_back(canonical_level(lo));
        q.push_back(canonical_level(hi));
    }
    std::sort(q.begin(), q.end());
    std::vector<double> unique;
    for (double v : q) {
        if (unique.empty() || !same_level(unique.back(), v)) unique.push_back(v);
    }
    std::sort(coverage_levels.begin(), coverage_levels.end());
    return LevelScheme(std::move(coverage_levels), std::move(unique));
}

std::optional<std::size_t> LevelScheme::find_quantile(double gamma) const {
    return find_level(quantile_, gamma);
}

std::optional<std::size_t> LevelScheme::find_coverage(double level) const {
    return find_level(coverage_, level);
}

std::pair<std::size_t, std::size_t> LevelScheme::tail_indices(double coverage) const {
    auto [lo, hi] = tail_levels(coverage);
    auto lo_idx = find_quantile(lo);
    auto hi_idx = find_quantile(hi);
    if (!lo_idx || !hi_idx) {
        throw DataError("missing quantile level " + format_level(lo_idx ? hi : lo) +
                        " for coverage " + format_level(coverage));
    }
    return {*lo_idx, *hi_idx};
}

LevelScheme default_levels() {
    return LevelScheme({0.1, 0.3, 0.5, 0.7, 0.9},
                       {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95});
}

std::string to_string(SplitTag tag) {
    switch (tag) {
        case SplitTag::train_surrogate: return "train-surrogate";
        case SplitTag::calibration: return "calibration";
        case SplitTag::test: return "test";
    }
    return "unknown";
}

SplitTag split_from_string(const std::string& text) {
    if (text == "train-surrogate") return SplitTag::train_surrogate;
    if (text == "calibration") return SplitTag::calibration;
    if (text == "test") return SplitTag::test;
    throw DataError("unknown split tag '" + text + "'");
}

std::vector<std::string> validate_dataset(const PairedDataset& dataset) {
    std::vector<std::string> violations;
    if (dataset.records.empty()) return violations;

    const GridLayout& ref_layout = dataset.records.front().truth.layout();
    const std::size_t ref_members = dataset.records.front().ensemble.member_count();

    for (std::size_t r = 0; r < dataset.records.size(); ++r) {
        const auto& rec = dataset.records[r];
        const std::string tag = "record " + std::to_string(r) + ": ";

        if (!rec.truth.layout().same_dims(ref_layout)) {
            violations.push_back(tag + "truth dimension mismatch");
        } else if (rec.truth.layout().mask() != ref_layout.mask()) {
            violations.push_back(tag + "truth mask mismatch");
        }
        if (rec.truth.non_finite_count() > 0) {
            violations.push_back(tag + "truth has non-finite value at valid point");
        }
        if (rec.coarse.height == 0 || rec.coarse.width == 0 ||
            rec.coarse.values.size() != rec.coarse.height * rec.coarse.width) {
            violations.push_back(tag + "coarse field malformed");
        } else if (rec.coarse.height > rec.truth.height() || rec.coarse.width > rec.truth.width()) {
            violations.push_back(tag + "coarse field larger than fine field");
        }

        const auto& members = rec.ensemble.members;
        if (members.size() < 2) {
            violations.push_back(tag + "ensemble has fewer than 2 members");
        }
        if (members.size() != ref_members) {
            violations.push_back(tag + "member count differs from record 0");
        }
        bool dims_ok = true;
        bool mask_ok = true;
        bool finite_ok = true;
        for (const auto& m : members) {
            if (!m.layout().same_dims(rec.truth.layout())) {
                dims_ok = false;
                continue;
            }
            if (m.layout().mask() != rec.truth.layout().mask()) mask_ok = false;
            if (m.non_finite_count() > 0) finite_ok = false;
        }
        if (!dims_ok) violations.push_back(tag + "ensemble member dimension mismatch");
        if (!mask_ok) violations.push_back(tag + "ensemble member mask mismatch");
        if (!finite_ok) violations.push_back(tag + "ensemble member has non-finite value at valid point");

        if (rec.deterministic) {
            if (!rec.deterministic->layout().same_dims(rec.truth.layout()) ||
                rec.deterministic->layout().mask() != rec.truth.layout().mask()) {
                violations.push_back(tag + "deterministic prediction layout mismatch");
            } else if (rec.deterministic->non_finite_count() > 0) {
                violations.push_back(tag + "deterministic prediction has non-finite value at valid point");
            }
        }
    }
    return violations;
}

}  // namespace gridcp
