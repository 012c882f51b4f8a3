#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nqk/common.hpp"
#include "nqk/data.hpp"
#include "nqk/qsim.hpp"

namespace nqk {

/// Trainable angles of a layered re-uploading circuit.
///
/// theta holds the single-qubit gate angles, row-major [layer][qubit][angle].
/// phi holds the coupling angles of the controlled gates that attach qubit
/// k+1 to qubit 0, row-major [layer][k][angle] with k in [0, n_qubits-2];
/// it is empty for a single qubit.
struct QnnParams {
    int n_qubits = 1;
    int n_layers = 1;
    std::vector<double> theta;
    std::vector<double> phi;

    static QnnParams zeros(int n_qubits, int n_layers);

    /// theta uniform in [-pi, pi), phi uniform too (phi is only nonempty for
    /// n_qubits > 1; the scaling protocol never uses random phi).
    static QnnParams random_init(int n_qubits, int n_layers, Rng& rng);

    std::size_t theta_size() const { return static_cast<std::size_t>(n_layers) * n_qubits * 3; }
    std::size_t phi_size() const {
        return static_cast<std::size_t>(n_layers) * (n_qubits - 1) * 3;
    }
    std::size_t param_count() const { return theta_size() + phi_size(); }

    double theta_at(int layer, int qubit, int angle) const {
        return theta[(static_cast<std::size_t>(layer) * n_qubits + qubit) * 3 + angle];
    }
    double& theta_at(int layer, int qubit, int angle) {
        return theta[(static_cast<std::size_t>(layer) * n_qubits + qubit) * 3 + angle];
    }
    double phi_at(int layer, int coupling, int angle) const {
        return phi[(static_cast<std::size_t>(layer) * (n_qubits - 1) + coupling) * 3 + angle];
    }
    double& phi_at(int layer, int coupling, int angle) {
        return phi[(static_cast<std::size_t>(layer) * (n_qubits - 1) + coupling) * 3 + angle];
    }

    Su2Angles theta_angles(int layer, int qubit) const {
        return {theta_at(layer, qubit, 0), theta_at(layer, qubit, 1), theta_at(layer, qubit, 2)};
    }
    Su2Angles phi_angles(int layer, int coupling) const {
        return {phi_at(layer, coupling, 0), phi_at(layer, coupling, 1), phi_at(layer, coupling, 2)};
    }

    /// Flat parameter vector: theta (row-major) followed by phi (row-major).
    std::vector<double> to_flat() const;
    void from_flat(std::span<const double> flat);

    void validate() const;

    nlohmann::json to_json() const;
    static QnnParams from_json(const nlohmann::json& j);
};

/// A feature row prepared for encoding: the raw features plus the ceil(p/3)
/// angle triples (zero-padded) and their materialized gate matrices.
struct EncodedPoint {
    std::vector<double> features;
    std::vector<Su2Angles> encoding_angles;
    std::vector<Mat2> encoding_mats;  // cached su2_matrix of each triple
};

/// Packs p features in order into consecutive angle triples; slots past the
/// features are exactly zero. Throws std::invalid_argument for p = 0.
std::vector<Su2Angles> encode_angles(std::span<const double> features);

/// encode_angles plus matrix materialization. Features outside [-1,1] are
/// accepted with a once-per-process stderr warning.
EncodedPoint encode_point(std::span<const double> features);

/// Encodes every row of a labeled table.
std::vector<EncodedPoint> encode_rows(const FeatureTable& table);

/// Single-qubit re-uploading circuit applied to |0>: per layer, all encoding
/// unitaries in order, then the trainable gate.
Statevector run_single_qubit_qnn(const QnnParams& params, const EncodedPoint& point);

/// n-qubit re-uploading circuit applied to |0...0>. Per layer: each encoding
/// unitary on every qubit, the per-qubit trainable gates, then one controlled
/// trainable gate per extra qubit k = 1..n-1 (control k, target 0) in
/// ascending k. n = 1 reduces to run_single_qubit_qnn.
Statevector run_nqubit_qnn(const QnnParams& params, const EncodedPoint& point);

/// Replicated single-qubit circuit on n qubits with a CNOT cascade per layer:
/// encoding block, U(theta_l) on every qubit, then CNOTs control s -> target
/// s+1 for s = 0..n-2 ascending. n = 1 is exactly run_single_qubit_qnn.
Statevector embed_1_to_n(const QnnParams& single_qubit_params, const EncodedPoint& point,
                         int n_qubits);

enum class ExtendInit { CopyFirstQubit, CopyWithNoise };

/// Grows params by one qubit: existing angles are copied, the new qubit's
/// theta copies qubit 0 (optionally with sigma-scaled Gaussian noise), and
/// the new coupling angles are exactly zero so the extension leaves the
/// first-qubit marginal unchanged.
QnnParams extend_params(const QnnParams& params, ExtendInit init = ExtendInit::CopyFirstQubit,
                        Rng* rng = nullptr, double noise_sigma = 0.01);

}  // namespace nqk
