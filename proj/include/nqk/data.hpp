#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nqk/common.hpp"

namespace nqk {

// ---------------------------------------------------------------------------
// Masks and tile labeling
// ---------------------------------------------------------------------------

/// Row-major boolean pixel grid. 0 = black (no object), 1 = white.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h);

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t count_set() const;
};

/// Even-odd scanline fill; a pixel is set when its center (x+0.5, y+0.5) lies
/// inside the polygon. Degenerate (zero-area) polygons produce an empty mask.
/// Pixels with centers exactly on an edge may land on either side; callers
/// should not rely on boundary pixels.
BinaryMask rasterize_polygon(const std::vector<std::array<double, 2>>& vertices,
                             int width, int height);

struct PartitionResult {
    std::vector<BinaryMask> tiles;  // row-major tile order
    int tiles_x = 0;
    int tiles_y = 0;
    int dropped_right_px = 0;  // trailing columns that did not fill a tile
    int dropped_bottom_px = 0;
};

/// Splits a grid into tile x tile pieces, dropping (and reporting) trailing
/// remainders. Throws data_error when tile exceeds either dimension.
PartitionResult partition(const BinaryMask& grid, int tile);

/// Inverse of partition on divisible dimensions (remainders are gone).
BinaryMask reassemble(const PartitionResult& parts);

/// Fraction of white pixels in a mask.
double gamma_fraction(const BinaryMask& mask);

/// Nearest-rank order statistic of the positive-coverage list: the value at
/// rank ceil(q/100 * N) (clamped to [1, N]) of the ascending sort. q = 0
/// yields the minimum.
double percentile_threshold(std::vector<double> positive_gammas, double q);

enum class TileLabel { Positive, Negative, Excluded };

/// gamma = 0 -> Negative; gamma > epsilon -> Positive; in between -> Excluded.
TileLabel assign_label(double gamma, double epsilon);

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

/// Pipeline position of a table; stages must run in this order (stages may be
/// skipped but never repeated or reordered).
enum class Provenance { Raw, Normalized, Reduced, Scaled };

const char* provenance_name(Provenance p);

/// M rows by p columns of real features, with {+1,-1} labels once labeled.
struct FeatureTable {
    std::vector<std::string> ids;   // size M, unique
    std::vector<double> features;   // row-major M*p
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<int> labels;        // empty, or size M with values in {+1,-1}
    std::vector<double> gammas;     // empty, or size M (mask coverage per row)
    Provenance provenance = Provenance::Raw;

    double at(std::size_t r, std::size_t c) const { return features[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return features[r * cols + c]; }
    std::span<const double> row(std::size_t r) const {
        return {features.data() + r * cols, cols};
    }
    bool labeled() const { return labels.size() == rows; }

    /// Shape/finiteness/label checks; throws data_error on violation.
    void validate() const;

    /// Row subset in the given index order.
    FeatureTable select(std::span<const std::size_t> indices) const;
};

/// Applies the tile rule to a gamma-annotated table: coverage above epsilon
/// keeps label +1, zero coverage gets -1, and rows with 0 < gamma <= epsilon
/// are dropped. Returns the labeled table.
FeatureTable label_by_gamma(const FeatureTable& table, double epsilon);

/// Undersamples the majority class to the minority count. Selection is
/// seeded; surviving rows keep their original order.
FeatureTable rebalance(const FeatureTable& table, std::uint64_t seed);

// --- z-score ---------------------------------------------------------------

struct ZscoreStats {
    std::vector<double> mean;
    std::vector<double> stddev;          // population std; 1.0 for flagged columns
    std::vector<std::size_t> constant_columns;
};

ZscoreStats zscore_fit(const FeatureTable& table);
FeatureTable zscore_apply(const FeatureTable& table, const ZscoreStats& stats);

// --- PCA / truncated SVD ----------------------------------------------------

enum class Reducer { Pca, TruncatedSvd };

/// Top-p right singular vectors of the (centered for PCA, raw for truncated
/// SVD) data matrix. Component signs are fixed by making each component's
/// largest-magnitude coordinate positive.
struct ReducerModel {
    Reducer kind = Reducer::Pca;
    std::size_t p = 0;
    std::size_t input_dim = 0;
    std::vector<double> mean;             // size input_dim; zeros for truncated SVD
    std::vector<double> components;       // row-major p * input_dim
    std::vector<double> singular_values;  // all input_dim values, descending
};

ReducerModel reduction_fit(const FeatureTable& table, std::size_t p, Reducer kind);
FeatureTable reduction_apply(const FeatureTable& table, const ReducerModel& model);

// --- [-1,1] scaling ----------------------------------------------------------

struct MinmaxStats {
    std::vector<double> min;
    std::vector<double> max;
    std::vector<std::size_t> constant_columns;
};

MinmaxStats minmax_fit(const FeatureTable& table);

/// Affine map of each column from [min,max] to [-1,1]. Values outside the
/// fitted range clamp to the boundary; the clamp count is reported through
/// `clamped` when given. Constant columns map to 0.
FeatureTable minmax_apply(const FeatureTable& table, const MinmaxStats& stats,
                          std::size_t* clamped = nullptr);

// --- splits ------------------------------------------------------------------

/// k disjoint folds covering [0, labels.size()), per-class counts differing by
/// at most one across folds. Indices within each fold are ascending.
std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<int>& labels,
                                                       int k, std::uint64_t seed);

/// Seeded stratified sample without replacement: exactly train_size + test_size
/// rows, each side balanced as evenly as the label counts allow.
void stratified_split(const std::vector<int>& labels, std::size_t train_size,
                      std::size_t test_size, std::uint64_t seed,
                      std::vector<std::size_t>& train_idx,
                      std::vector<std::size_t>& test_idx);

// --- synthetic data ------------------------------------------------------------

enum class SyntheticKind { Blobs, Circles, Moons };

SyntheticKind synthetic_kind_from_string(const std::string& name);
const char* synthetic_kind_name(SyntheticKind kind);

/// Standard 2-d toy generators with labels in {+1,-1}, deterministic per seed.
FeatureTable make_synthetic(SyntheticKind kind, std::size_t m, double noise,
                            std::uint64_t seed);

// --- file formats -----------------------------------------------------------

/// Binary PGM (P5), maxval 255; 0 = black, 255 = white.
BinaryMask read_pgm(const std::string& path);
void write_pgm(const BinaryMask& mask, const std::string& path);

/// Feature CSV: header `id,f0,...,f{p-1}[,gamma][,label]`, '.' decimal,
/// UTF-8. gamma and label columns are optional and recognized by name.
FeatureTable read_feature_csv(const std::string& path);
void write_feature_csv(const FeatureTable& table, const std::string& path);

/// Serializes a table to the CSV format without touching the filesystem
/// (used for content hashing).
std::string feature_csv_string(const FeatureTable& table);

/// Named id subsets with leakage rules: unet_train is disjoint from
/// unet_test; one_to_n and n_to_n are subsets of unet_test and disjoint from
/// each other.
struct SplitSpec {
    std::map<std::string, std::vector<std::string>> subsets;
    std::uint64_t seed = 0;

    void validate() const;
    static SplitSpec load(const std::string& path);
    void save(const std::string& path) const;
};

}  // namespace nqk
