#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridcp {

/// Raised when input data violates a container or alignment contract.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Mask = std::vector<std::uint8_t>;

/**
 * Raster geometry shared by a field and everything derived from it.
 *
 * A mask entry of 1 marks a valid grid point. Without a mask every point is
 * valid. Storage is row-major.
 */
class GridLayout {
public:
    GridLayout() = default;
    GridLayout(std::size_t height, std::size_t width, std::optional<Mask> mask = std::nullopt);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return height_ * width_; }
    std::size_t index(std::size_t row, std::size_t col) const { return row * width_ + col; }

    bool has_mask() const { return mask_.has_value(); }
    const std::optional<Mask>& mask() const { return mask_; }
    bool valid(std::size_t idx) const { return !mask_ || (*mask_)[idx] != 0; }
    std::size_t valid_count() const;

    bool same_dims(const GridLayout& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }
    bool operator==(const GridLayout& other) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::optional<Mask> mask_;
};

/// One scalar variable on a fine raster.
class GridField {
public:
    GridField() = default;
    GridField(GridLayout layout, std::vector<double> values);
    GridField(std::size_t height, std::size_t width, std::vector<double> values,
              std::optional<Mask> mask = std::nullopt);

    static GridField filled(const GridLayout& layout, double value);

    const GridLayout& layout() const { return layout_; }
    std::size_t height() const { return layout_.height(); }
    std::size_t width() const { return layout_.width(); }
    std::size_t size() const { return layout_.size(); }
    bool valid(std::size_t idx) const { return layout_.valid(idx); }

    std::span<const double> values() const { return values_; }
    double operator[](std::size_t idx) const { return values_[idx]; }
    double at(std::size_t row, std::size_t col) const { return values_[layout_.index(row, col)]; }

    /// Number of non-finite entries at valid points.
    std::size_t non_finite_count() const;

    bool operator==(const GridField& other) const = default;

private:
    GridLayout layout_;
    std::vector<double> values_;
};

/// Coarse-resolution predictor field; never masked.
struct CoarseField {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
};

/**
 * M exchangeable members sampled for one conditioning input.
 *
 * The container does not enforce consistency so that malformed batches can be
 * diagnosed; use `consistency_error` or `validate_dataset`.
 */
struct EnsembleBatch {
    std::vector<GridField> members;

    std::size_t member_count() const { return members.size(); }
    /// Empty when all members share the first member's dimensions and mask.
    std::optional<std::string> consistency_error() const;
};

/**
 * Coverage levels 1-alpha and quantile levels gamma, with every coverage
 * level backed by both tails alpha/2 and 1-alpha/2.
 */
class LevelScheme {
public:
    /// Level comparisons tolerate this much rounding (0.05 vs (1-0.9)/2).
    static constexpr double kLevelTolerance = 1e-9;

    LevelScheme(std::vector<double> coverage_levels, std::vector<double> quantile_levels);

    /// Quantile levels are exactly the tails of the given coverage levels.
    static LevelScheme from_coverage(std::vector<double> coverage_levels);

    const std::vector<double>& coverage_levels() const { return coverage_; }
    const std::vector<double>& quantile_levels() const { return quantile_; }

    std::optional<std::size_t> find_quantile(double gamma) const;
    std::optional<std::size_t> find_coverage(double level) const;

    /// Indices into quantile_levels() of (alpha/2, 1-alpha/2) for a coverage level.
    std::pair<std::size_t, std::size_t> tail_indices(double coverage) const;

    bool operator==(const LevelScheme& other) const = default;

private:
    std::vector<double> coverage_;
    std::vector<double> quantile_;
};

/// Gamma = {0.05, 0.15, ..., 0.95}, coverage = {0.1, 0.3, 0.5, 0.7, 0.9}.
LevelScheme default_levels();

/// Lower tail alpha/2 and upper tail 1-alpha/2 of a coverage level.
inline std::pair<double, double> tail_levels(double coverage) {
    const double alpha = 1.0 - coverage;
    return {alpha / 2.0, 1.0 - alpha / 2.0};
}

bool same_level(double a, double b);

/// Shortest round-trip text for a level, e.g. "0.05"; used as file and JSON keys.
std::string level_key(double level);

enum class SplitTag { train_surrogate, calibration, test };

std::string to_string(SplitTag tag);
SplitTag split_from_string(const std::string& text);

struct PairedRecord {
    CoarseField coarse;
    GridField truth;
    EnsembleBatch ensemble;
    /// Point prediction used by split conformal calibration, when available.
    std::optional<GridField> deterministic;
};

struct PairedDataset {
    std::vector<PairedRecord> records;
    SplitTag split = SplitTag::calibration;
};

/// Empty iff every record satisfies the container invariants.
std::vector<std::string> validate_dataset(const PairedDataset& dataset);

}  // namespace gridcp
