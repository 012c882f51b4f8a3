#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nqk/common.hpp"
#include "nqk/data.hpp"
#include "nqk/reupload.hpp"

namespace nqk {

enum class EmbeddingKind { OneToN, NToN };

EmbeddingKind embedding_kind_from_string(const std::string& name);
const char* embedding_kind_name(EmbeddingKind kind);

/// Which circuit turns a data point into a state: the replicated single-qubit
/// circuit with CNOT cascades (one_to_n) or the trained n-qubit circuit
/// itself (n_to_n).
struct EmbeddingSpec {
    EmbeddingKind kind = EmbeddingKind::OneToN;
    QnnParams params;  // one_to_n requires params.n_qubits == 1
    int n_qubits = 1;

    void validate() const;
    Statevector embed(const EncodedPoint& point) const;

    nlohmann::json to_json() const;
    static EmbeddingSpec from_json(const nlohmann::json& j);
};

/// Symmetric fidelity-kernel matrix over M points, entries in [0,1] with a
/// unit diagonal.
struct GramMatrix {
    std::size_t size = 0;
    std::vector<double> entries;  // row-major size*size
    std::vector<std::string> point_ids;

    double at(std::size_t i, std::size_t j) const { return entries[i * size + j]; }
    double& at(std::size_t i, std::size_t j) { return entries[i * size + j]; }

    /// Symmetry / diagonal / range checks. Throws numerical_error.
    void validate(double tol = 1e-10) const;

    /// Smallest eigenvalue via the dense symmetric eigensolver; meant for
    /// moderate sizes (tests and PSD audits).
    double min_eigenvalue() const;
};

/// Rectangular kernel block: rows are test points, columns training points.
struct CrossGram {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> entries;
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;

    double at(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }
    std::span<const double> row(std::size_t i) const { return {entries.data() + i * cols, cols}; }
};

/// Fidelity between the two embedded states.
double kernel_entry(const EmbeddingSpec& spec, const EncodedPoint& xi, const EncodedPoint& xj);

/// Full Gram matrix: every state computed once (M circuit runs), pair
/// fidelities filled from the cache. Entries within 1e-12 of [0,1] clamp to
/// the boundary.
GramMatrix gram(const EmbeddingSpec& spec, const FeatureTable& table);

/// Serial per-pair recomputation (no state cache, no threads); the reference
/// the cached version is tested against.
GramMatrix gram_reference(const EmbeddingSpec& spec, const FeatureTable& table);

/// k(test_row, train_col) block for evaluating the SVM on unseen points.
CrossGram cross_gram(const EmbeddingSpec& spec, const FeatureTable& train,
                     const FeatureTable& test);

/// Writes <base>.csv (matrix, %.17g) and <base>.json (point ids, feature
/// count, qubit count, embedding kind, content hash of the embedding spec).
void save_gram(const GramMatrix& g, const EmbeddingSpec& spec, std::size_t feature_count,
               const std::string& base_path);

GramMatrix load_gram(const std::string& base_path);

}  // namespace nqk
