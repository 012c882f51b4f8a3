#include "nqk/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nqk/linalg.hpp"

namespace nqk {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Masks
// ---------------------------------------------------------------------------

BinaryMask::BinaryMask(int w, int h) {
    if (w <= 0 || h <= 0) throw data_error("BinaryMask: dimensions must be positive");
    width = w;
    height = h;
    bits.assign(static_cast<std::size_t>(w) * h, 0);
}

std::size_t BinaryMask::count_set() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
}

BinaryMask rasterize_polygon(const std::vector<std::array<double, 2>>& vertices,
                             int width, int height) {
    if (vertices.size() < 3) {
        throw std::invalid_argument("rasterize_polygon: need at least 3 vertices");
    }
    BinaryMask mask(width, height);

    double area2 = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const auto& p = vertices[i];
        const auto& q = vertices[(i + 1) % vertices.size()];
        area2 += p[0] * q[1] - q[0] * p[1];
    }
    if (area2 == 0.0) return mask;

    std::vector<double> xs;
    for (int y = 0; y < height; ++y) {
        const double cy = y + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            const auto& p = vertices[i];
            const auto& q = vertices[(i + 1) % vertices.size()];
            // Half-open rule on the y-span so shared vertices count once.
            if ((p[1] <= cy) == (q[1] <= cy)) continue;
            const double t = (cy - p[1]) / (q[1] - p[1]);
            xs.push_back(p[0] + t * (q[0] - p[0]));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            int x = static_cast<int>(std::ceil(xs[i] - 0.5));
            if (x < 0) x = 0;
            for (; x < width && x + 0.5 < xs[i + 1]; ++x) mask.set(x, y, true);
        }
    }
    return mask;
}

PartitionResult partition(const BinaryMask& grid, int tile) {
    if (tile <= 0) throw std::invalid_argument("partition: tile must be positive");
    if (tile > grid.width || tile > grid.height) {
        throw data_error("partition: tile size " + std::to_string(tile) +
                         " exceeds grid " + std::to_string(grid.width) + "x" +
                         std::to_string(grid.height));
    }
    PartitionResult out;
    out.tiles_x = grid.width / tile;
    out.tiles_y = grid.height / tile;
    out.dropped_right_px = grid.width - out.tiles_x * tile;
    out.dropped_bottom_px = grid.height - out.tiles_y * tile;
    out.tiles.reserve(static_cast<std::size_t>(out.tiles_x) * out.tiles_y);
    for (int ty = 0; ty < out.tiles_y; ++ty) {
        for (int tx = 0; tx < out.tiles_x; ++tx) {
            BinaryMask t(tile, tile);
            for (int y = 0; y < tile; ++y) {
                for (int x = 0; x < tile; ++x) {
                    t.set(x, y, grid.at(tx * tile + x, ty * tile + y));
                }
            }
            out.tiles.push_back(std::move(t));
        }
    }
    return out;
}

BinaryMask reassemble(const PartitionResult& parts) {
    if (parts.tiles.empty()) throw data_error("reassemble: no tiles");
    const int tile = parts.tiles.front().width;
    BinaryMask out(parts.tiles_x * tile, parts.tiles_y * tile);
    for (int ty = 0; ty < parts.tiles_y; ++ty) {
        for (int tx = 0; tx < parts.tiles_x; ++tx) {
            const BinaryMask& t = parts.tiles[static_cast<std::size_t>(ty) * parts.tiles_x + tx];
            for (int y = 0; y < tile; ++y) {
                for (int x = 0; x < tile; ++x) {
                    out.set(tx * tile + x, ty * tile + y, t.at(x, y));
                }
            }
        }
    }
    return out;
}

double gamma_fraction(const BinaryMask& mask) {
    return static_cast<double>(mask.count_set()) /
           (static_cast<double>(mask.width) * mask.height);
}

double percentile_threshold(std::vector<double> positive_gammas, double q) {
    if (positive_gammas.empty()) {
        throw data_error("percentile_threshold: empty coverage list");
    }
    if (q < 0.0 || q > 100.0) {
        throw std::invalid_argument("percentile_threshold: q outside [0,100]");
    }
    std::sort(positive_gammas.begin(), positive_gammas.end());
    const std::size_t n = positive_gammas.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return positive_gammas[rank - 1];
}

TileLabel assign_label(double gamma, double epsilon) {
    if (gamma == 0.0) return TileLabel::Negative;
    if (gamma > epsilon) return TileLabel::Positive;
    return TileLabel::Excluded;
}

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Raw: return "raw";
        case Provenance::Normalized: return "normalized";
        case Provenance::Reduced: return "reduced";
        case Provenance::Scaled: return "scaled";
    }
    return "?";
}

void FeatureTable::validate() const {
    if (features.size() != rows * cols) throw data_error("FeatureTable: feature buffer size mismatch");
    if (ids.size() != rows) throw data_error("FeatureTable: id count mismatch");
    if (!labels.empty() && labels.size() != rows) throw data_error("FeatureTable: label count mismatch");
    if (!gammas.empty() && gammas.size() != rows) throw data_error("FeatureTable: gamma count mismatch");
    for (double v : features) {
        if (!std::isfinite(v)) throw data_error("FeatureTable: non-finite feature value");
    }
    for (int y : labels) {
        if (y != 1 && y != -1) throw data_error("FeatureTable: labels must be +1 or -1");
    }
    std::set<std::string> seen;
    for (const std::string& id : ids) {
        if (!seen.insert(id).second) throw data_error("FeatureTable: duplicate id '" + id + "'");
    }
}

FeatureTable FeatureTable::select(std::span<const std::size_t> indices) const {
    FeatureTable out;
    out.cols = cols;
    out.rows = indices.size();
    out.provenance = provenance;
    out.features.reserve(out.rows * cols);
    out.ids.reserve(out.rows);
    for (std::size_t r : indices) {
        if (r >= rows) throw std::out_of_range("FeatureTable::select: row out of range");
        out.ids.push_back(ids[r]);
        out.features.insert(out.features.end(), features.begin() + r * cols,
                            features.begin() + (r + 1) * cols);
        if (!labels.empty()) out.labels.push_back(labels[r]);
        if (!gammas.empty()) out.gammas.push_back(gammas[r]);
    }
    return out;
}

FeatureTable label_by_gamma(const FeatureTable& table, double epsilon) {
    if (table.gammas.size() != table.rows) {
        throw data_error("label_by_gamma: table has no gamma column");
    }
    std::vector<std::size_t> keep;
    std::vector<int> labels;
    for (std::size_t r = 0; r < table.rows; ++r) {
        switch (assign_label(table.gammas[r], epsilon)) {
            case TileLabel::Positive:
                keep.push_back(r);
                labels.push_back(+1);
                break;
            case TileLabel::Negative:
                keep.push_back(r);
                labels.push_back(-1);
                break;
            case TileLabel::Excluded:
                break;
        }
    }
    FeatureTable out = table.select(keep);
    out.labels = std::move(labels);
    return out;
}

FeatureTable rebalance(const FeatureTable& table, std::uint64_t seed) {
    if (!table.labeled()) throw data_error("rebalance: table is not labeled");
    std::vector<std::size_t> pos, neg;
    for (std::size_t r = 0; r < table.rows; ++r) {
        (table.labels[r] > 0 ? pos : neg).push_back(r);
    }
    if (pos.empty() || neg.empty()) throw data_error("rebalance: need both classes");
    if (pos.size() == neg.size()) return table;

    std::vector<std::size_t>& majority = pos.size() > neg.size() ? pos : neg;
    const std::size_t target = std::min(pos.size(), neg.size());
    Rng rng(mix_seed(seed, 0x7265626cull));  // "rebl"
    rng.shuffle(majority);
    majority.resize(target);

    std::vector<std::size_t> keep;
    keep.reserve(2 * target);
    keep.insert(keep.end(), pos.begin(), pos.end());
    keep.insert(keep.end(), neg.begin(), neg.end());
    std::sort(keep.begin(), keep.end());
    return table.select(keep);
}

// --- z-score -----------------------------------------------------------------

ZscoreStats zscore_fit(const FeatureTable& table) {
    if (table.rows == 0) throw data_error("zscore_fit: empty table");
    if (table.provenance != Provenance::Raw) {
        throw data_error(std::string("zscore_fit: expected a raw table, got ") +
                         provenance_name(table.provenance));
    }
    ZscoreStats s;
    s.mean.assign(table.cols, 0.0);
    s.stddev.assign(table.cols, 0.0);
    for (std::size_t c = 0; c < table.cols; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < table.rows; ++r) m += table.at(r, c);
        m /= static_cast<double>(table.rows);
        double var = 0.0;
        for (std::size_t r = 0; r < table.rows; ++r) {
            const double d = table.at(r, c) - m;
            var += d * d;
        }
        var /= static_cast<double>(table.rows);  // population variance
        s.mean[c] = m;
        if (var > 0.0) {
            s.stddev[c] = std::sqrt(var);
        } else {
            s.stddev[c] = 1.0;
            s.constant_columns.push_back(c);
        }
    }
    return s;
}

FeatureTable zscore_apply(const FeatureTable& table, const ZscoreStats& stats) {
    if (stats.mean.size() != table.cols) throw data_error("zscore_apply: column mismatch");
    if (table.provenance != Provenance::Raw) {
        throw data_error(std::string("zscore_apply: expected a raw table, got ") +
                         provenance_name(table.provenance));
    }
    FeatureTable out = table;
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t c = 0; c < out.cols; ++c) {
            out.at(r, c) = (out.at(r, c) - stats.mean[c]) / stats.stddev[c];
        }
    }
    out.provenance = Provenance::Normalized;
    return out;
}

// --- PCA / truncated SVD -------------------------------------------------------

ReducerModel reduction_fit(const FeatureTable& table, std::size_t p, Reducer kind) {
    if (p == 0 || p > table.cols) {
        throw config_error("reduction_fit: p must be in [1, " + std::to_string(table.cols) + "]");
    }
    if (table.rows < 2) throw data_error("reduction_fit: need at least 2 rows");
    if (table.provenance != Provenance::Raw && table.provenance != Provenance::Normalized) {
        throw data_error(std::string("reduction_fit: expected raw or normalized input, got ") +
                         provenance_name(table.provenance));
    }
    const std::size_t d = table.cols;

    ReducerModel model;
    model.kind = kind;
    model.p = p;
    model.input_dim = d;
    model.mean.assign(d, 0.0);
    if (kind == Reducer::Pca) {
        for (std::size_t c = 0; c < d; ++c) {
            double m = 0.0;
            for (std::size_t r = 0; r < table.rows; ++r) m += table.at(r, c);
            model.mean[c] = m / static_cast<double>(table.rows);
        }
    }

    // Scatter matrix S = (X - mean)^T (X - mean); right singular vectors of the
    // (centered) data matrix are its eigenvectors.
    std::vector<double> scatter(d * d, 0.0);
    std::vector<double> rowv(d);
    for (std::size_t r = 0; r < table.rows; ++r) {
        for (std::size_t c = 0; c < d; ++c) rowv[c] = table.at(r, c) - model.mean[c];
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) scatter[i * d + j] += rowv[i] * rowv[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) scatter[i * d + j] = scatter[j * d + i];
    }

    SymEig eig = jacobi_eigensymmetric(scatter, d, true);

    model.singular_values.resize(d);
    model.components.assign(p * d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        const double lambda = eig.values[d - 1 - k];  // descending
        model.singular_values[k] = std::sqrt(lambda > 0.0 ? lambda : 0.0);
    }
    for (std::size_t k = 0; k < p; ++k) {
        const double* vec = eig.vectors.data() + (d - 1 - k) * d;
        // Sign convention: the largest-|entry| coordinate is made positive.
        std::size_t arg = 0;
        for (std::size_t i = 1; i < d; ++i) {
            if (std::abs(vec[i]) > std::abs(vec[arg])) arg = i;
        }
        const double sign = vec[arg] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < d; ++i) model.components[k * d + i] = sign * vec[i];
    }
    return model;
}

FeatureTable reduction_apply(const FeatureTable& table, const ReducerModel& model) {
    if (table.cols != model.input_dim) throw data_error("reduction_apply: column mismatch");
    if (table.provenance != Provenance::Raw && table.provenance != Provenance::Normalized) {
        throw data_error(std::string("reduction_apply: expected raw or normalized input, got ") +
                         provenance_name(table.provenance));
    }
    FeatureTable out;
    out.ids = table.ids;
    out.labels = table.labels;
    out.gammas = table.gammas;
    out.rows = table.rows;
    out.cols = model.p;
    out.provenance = Provenance::Reduced;
    out.features.assign(out.rows * out.cols, 0.0);
    for (std::size_t r = 0; r < table.rows; ++r) {
        for (std::size_t k = 0; k < model.p; ++k) {
            double acc = 0.0;
            for (std::size_t c = 0; c < table.cols; ++c) {
                acc += (table.at(r, c) - model.mean[c]) * model.components[k * model.input_dim + c];
            }
            out.at(r, k) = acc;
        }
    }
    return out;
}

// --- [-1,1] scaling -------------------------------------------------------------

MinmaxStats minmax_fit(const FeatureTable& table) {
    if (table.rows == 0) throw data_error("minmax_fit: empty table");
    if (table.provenance == Provenance::Scaled) {
        throw data_error("minmax_fit: table is already scaled");
    }
    MinmaxStats s;
    s.min.assign(table.cols, 0.0);
    s.max.assign(table.cols, 0.0);
    for (std::size_t c = 0; c < table.cols; ++c) {
        double lo = table.at(0, c), hi = table.at(0, c);
        for (std::size_t r = 1; r < table.rows; ++r) {
            lo = std::min(lo, table.at(r, c));
            hi = std::max(hi, table.at(r, c));
        }
        s.min[c] = lo;
        s.max[c] = hi;
        if (lo == hi) s.constant_columns.push_back(c);
    }
    return s;
}

FeatureTable minmax_apply(const FeatureTable& table, const MinmaxStats& stats,
                          std::size_t* clamped) {
    if (stats.min.size() != table.cols) throw data_error("minmax_apply: column mismatch");
    if (table.provenance == Provenance::Scaled) {
        throw data_error("minmax_apply: table is already scaled");
    }
    std::size_t clamp_count = 0;
    FeatureTable out = table;
    for (std::size_t c = 0; c < out.cols; ++c) {
        const double lo = stats.min[c];
        const double span = stats.max[c] - lo;
        for (std::size_t r = 0; r < out.rows; ++r) {
            double v;
            if (span == 0.0) {
                v = 0.0;
            } else {
                v = 2.0 * (out.at(r, c) - lo) / span - 1.0;
                if (v < -1.0) {
                    v = -1.0;
                    ++clamp_count;
                } else if (v > 1.0) {
                    v = 1.0;
                    ++clamp_count;
                }
            }
            out.at(r, c) = v;
        }
    }
    if (clamped) *clamped = clamp_count;
    out.provenance = Provenance::Scaled;
    return out;
}

// --- splits ---------------------------------------------------------------------

std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<int>& labels,
                                                       int k, std::uint64_t seed) {
    if (k < 2) throw config_error("stratified_kfold: k must be >= 2");
    if (labels.size() < static_cast<std::size_t>(k)) {
        throw data_error("stratified_kfold: fewer samples than folds");
    }
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1 && labels[i] != -1) {
            throw data_error("stratified_kfold: labels must be +1 or -1");
        }
        (labels[i] > 0 ? pos : neg).push_back(i);
    }
    Rng rng(mix_seed(seed, 0x6b666f6cull));  // "kfol"
    rng.shuffle(pos);
    rng.shuffle(neg);

    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < pos.size(); ++i) folds[i % k].push_back(pos[i]);
    for (std::size_t i = 0; i < neg.size(); ++i) folds[i % k].push_back(neg[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

void stratified_split(const std::vector<int>& labels, std::size_t train_size,
                      std::size_t test_size, std::uint64_t seed,
                      std::vector<std::size_t>& train_idx,
                      std::vector<std::size_t>& test_idx) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? pos : neg).push_back(i);
    if (train_size + test_size > labels.size()) {
        throw data_error("stratified_split: requested " + std::to_string(train_size + test_size) +
                         " rows, have " + std::to_string(labels.size()));
    }
    Rng rng(mix_seed(seed, 0x73706c74ull));  // "splt"
    rng.shuffle(pos);
    rng.shuffle(neg);

    const std::size_t train_pos = train_size / 2;
    const std::size_t train_neg = train_size - train_pos;
    const std::size_t test_pos = test_size / 2;
    const std::size_t test_neg = test_size - test_pos;
    if (train_pos + test_pos > pos.size() || train_neg + test_neg > neg.size()) {
        throw data_error("stratified_split: class counts cannot satisfy the requested sizes");
    }

    train_idx.clear();
    test_idx.clear();
    train_idx.insert(train_idx.end(), pos.begin(), pos.begin() + train_pos);
    train_idx.insert(train_idx.end(), neg.begin(), neg.begin() + train_neg);
    test_idx.insert(test_idx.end(), pos.begin() + train_pos, pos.begin() + train_pos + test_pos);
    test_idx.insert(test_idx.end(), neg.begin() + train_neg, neg.begin() + train_neg + test_neg);
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
}

// --- synthetic data ----------------------------------------------------------------

SyntheticKind synthetic_kind_from_string(const std::string& name) {
    if (name == "blobs") return SyntheticKind::Blobs;
    if (name == "circles") return SyntheticKind::Circles;
    if (name == "moons") return SyntheticKind::Moons;
    throw config_error("unknown synthetic dataset kind '" + name + "'");
}

const char* synthetic_kind_name(SyntheticKind kind) {
    switch (kind) {
        case SyntheticKind::Blobs: return "blobs";
        case SyntheticKind::Circles: return "circles";
        case SyntheticKind::Moons: return "moons";
    }
    return "?";
}

FeatureTable make_synthetic(SyntheticKind kind, std::size_t m, double noise,
                            std::uint64_t seed) {
    if (m < 4) throw config_error("make_synthetic: m must be >= 4");
    Rng rng(mix_seed(seed, 0x73796e74ull));  // "synt"
    const double pi = 3.14159265358979323846;

    FeatureTable t;
    t.cols = 2;
    t.rows = m;
    t.features.reserve(2 * m);
    t.ids.reserve(m);
    t.labels.reserve(m);

    const std::size_t n_first = m - m / 2;  // class written first
    const std::size_t n_second = m / 2;

    auto push = [&](double x, double y, int label) {
        t.ids.push_back(std::to_string(t.ids.size()));
        t.features.push_back(x + noise * rng.normal());
        t.features.push_back(y + noise * rng.normal());
        t.labels.push_back(label);
    };

    switch (kind) {
        case SyntheticKind::Blobs:
            for (std::size_t i = 0; i < n_first; ++i) push(1.5, 1.5, +1);
            for (std::size_t i = 0; i < n_second; ++i) push(-1.5, -1.5, -1);
            break;
        case SyntheticKind::Circles:
            for (std::size_t i = 0; i < n_first; ++i) {
                const double a = 2.0 * pi * static_cast<double>(i) / static_cast<double>(n_first);
                push(std::cos(a), std::sin(a), -1);  // outer ring
            }
            for (std::size_t i = 0; i < n_second; ++i) {
                const double a = 2.0 * pi * static_cast<double>(i) / static_cast<double>(n_second);
                push(0.5 * std::cos(a), 0.5 * std::sin(a), +1);  // inner ring
            }
            break;
        case SyntheticKind::Moons:
            for (std::size_t i = 0; i < n_first; ++i) {
                const double a = pi * static_cast<double>(i) / static_cast<double>(n_first - 1);
                push(std::cos(a), std::sin(a), -1);
            }
            for (std::size_t i = 0; i < n_second; ++i) {
                const double a = pi * static_cast<double>(i) / static_cast<double>(n_second - 1);
                push(1.0 - std::cos(a), 0.5 - std::sin(a), +1);
            }
            break;
    }
    return t;
}

// --- file formats ----------------------------------------------------------------

BinaryMask read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("read_pgm: cannot open '" + path + "'");

    auto next_token = [&in, &path]() -> std::string {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {
                }
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        if (tok.empty()) throw data_error("read_pgm: truncated header in '" + path + "'");
        return tok;
    };

    if (next_token() != "P5") throw data_error("read_pgm: '" + path + "' is not binary PGM (P5)");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw data_error("read_pgm: malformed header in '" + path + "'");
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw data_error("read_pgm: unsupported dimensions/maxval in '" + path + "'");
    }

    std::vector<char> raw(static_cast<std::size_t>(w) * h);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw data_error("read_pgm: truncated pixel data in '" + path + "'");
    }
    BinaryMask mask(w, h);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        mask.bits[i] = static_cast<unsigned char>(raw[i]) >= 128 ? 1 : 0;
    }
    return mask;
}

void write_pgm(const BinaryMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("write_pgm: cannot open '" + path + "' for writing");
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    std::vector<char> raw(mask.bits.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = mask.bits[i] ? static_cast<char>(255) : 0;
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) throw data_error("write_pgm: failed writing '" + path + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw data_error("invalid number '" + s + "' in " + context);
    }
    return v;
}

void format_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

FeatureTable read_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("read_feature_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw data_error("read_feature_csv: empty file '" + path + "'");
    const std::vector<std::string> header = split_csv_line(line);
    if (header.empty() || header[0] != "id") {
        throw data_error("read_feature_csv: header must start with 'id' in '" + path + "'");
    }

    std::size_t n_features = 0;
    bool has_gamma = false, has_label = false;
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i] == "gamma") {
            has_gamma = true;
        } else if (header[i] == "label") {
            has_label = true;
        } else if (header[i] == "f" + std::to_string(n_features) && !has_gamma && !has_label) {
            ++n_features;
        } else {
            throw data_error("read_feature_csv: unexpected column '" + header[i] + "' in '" +
                             path + "'");
        }
    }
    if (n_features == 0) throw data_error("read_feature_csv: no feature columns in '" + path + "'");

    FeatureTable t;
    t.cols = n_features;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw data_error("read_feature_csv: row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        }
        const std::string ctx = path + ":" + std::to_string(line_no);
        t.ids.push_back(cells[0]);
        std::size_t cell = 1;
        for (std::size_t f = 0; f < n_features; ++f) {
            t.features.push_back(parse_double(cells[cell++], ctx));
        }
        if (has_gamma) t.gammas.push_back(parse_double(cells[cell++], ctx));
        if (has_label) {
            const double y = parse_double(cells[cell++], ctx);
            if (y != 1.0 && y != -1.0) throw data_error("label must be +1 or -1 in " + ctx);
            t.labels.push_back(static_cast<int>(y));
        }
        ++t.rows;
    }
    t.validate();
    return t;
}

std::string feature_csv_string(const FeatureTable& table) {
    std::string out = "id";
    for (std::size_t c = 0; c < table.cols; ++c) out += ",f" + std::to_string(c);
    if (!table.gammas.empty()) out += ",gamma";
    if (!table.labels.empty()) out += ",label";
    out += "\n";
    for (std::size_t r = 0; r < table.rows; ++r) {
        out += table.ids[r];
        for (std::size_t c = 0; c < table.cols; ++c) {
            out += ',';
            format_double(out, table.at(r, c));
        }
        if (!table.gammas.empty()) {
            out += ',';
            format_double(out, table.gammas[r]);
        }
        if (!table.labels.empty()) {
            out += ',';
            out += table.labels[r] > 0 ? "1" : "-1";
        }
        out += "\n";
    }
    return out;
}

void write_feature_csv(const FeatureTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("write_feature_csv: cannot open '" + path + "' for writing");
    out << feature_csv_string(table);
    if (!out) throw data_error("write_feature_csv: failed writing '" + path + "'");
}

// --- split spec -------------------------------------------------------------------

namespace {

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a) {
        if (b.count(x)) return false;
    }
    return true;
}

bool subset_of(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a) {
        if (!b.count(x)) return false;
    }
    return true;
}

}  // namespace

void SplitSpec::validate() const {
    std::map<std::string, std::set<std::string>> sets;
    for (const auto& [name, ids] : subsets) {
        std::set<std::string> s(ids.begin(), ids.end());
        if (s.size() != ids.size()) {
            throw data_error("SplitSpec: duplicate ids inside subset '" + name + "'");
        }
        sets[name] = std::move(s);
    }
    auto get = [&sets](const char* name) -> const std::set<std::string>* {
        auto it = sets.find(name);
        return it == sets.end() ? nullptr : &it->second;
    };
    const auto* unet_train = get("unet_train");
    const auto* unet_test = get("unet_test");
    const auto* one_to_n = get("one_to_n");
    const auto* n_to_n = get("n_to_n");

    if (unet_train && unet_test && !disjoint(*unet_train, *unet_test)) {
        throw data_error("SplitSpec: unet_train and unet_test overlap");
    }
    if (one_to_n && unet_test && !subset_of(*one_to_n, *unet_test)) {
        throw data_error("SplitSpec: one_to_n must be a subset of unet_test");
    }
    if (n_to_n && unet_test && !subset_of(*n_to_n, *unet_test)) {
        throw data_error("SplitSpec: n_to_n must be a subset of unet_test");
    }
    if (one_to_n && n_to_n && !disjoint(*one_to_n, *n_to_n)) {
        throw data_error("SplitSpec: one_to_n and n_to_n overlap");
    }
    if (unet_train) {
        for (const char* other : {"one_to_n", "n_to_n"}) {
            if (const auto* s = get(other); s && !disjoint(*unet_train, *s)) {
                throw data_error(std::string("SplitSpec: unet_train and ") + other + " overlap");
            }
        }
    }
}

SplitSpec SplitSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("SplitSpec: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw data_error("SplitSpec: invalid JSON in '" + path + "': " + e.what());
    }
    SplitSpec spec;
    spec.seed = j.value("seed", std::uint64_t{0});
    if (!j.contains("subsets") || !j["subsets"].is_object()) {
        throw data_error("SplitSpec: missing 'subsets' object in '" + path + "'");
    }
    for (const auto& [name, ids] : j["subsets"].items()) {
        spec.subsets[name] = ids.get<std::vector<std::string>>();
    }
    spec.validate();
    return spec;
}

void SplitSpec::save(const std::string& path) const {
    validate();
    json j;
    j["seed"] = seed;
    j["subsets"] = json::object();
    for (const auto& [name, ids] : subsets) j["subsets"][name] = ids;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("SplitSpec: cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

}  // namespace nqk
