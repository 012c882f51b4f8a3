#include "nqk/reupload.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace nqk {

using json = nlohmann::json;

QnnParams QnnParams::zeros(int n_qubits, int n_layers) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw config_error("QnnParams: n_qubits must be in [1, " + std::to_string(kMaxQubits) + "]");
    }
    if (n_layers < 1) throw config_error("QnnParams: n_layers must be >= 1");
    QnnParams p;
    p.n_qubits = n_qubits;
    p.n_layers = n_layers;
    p.theta.assign(p.theta_size(), 0.0);
    p.phi.assign(p.phi_size(), 0.0);
    return p;
}

QnnParams QnnParams::random_init(int n_qubits, int n_layers, Rng& rng) {
    QnnParams p = zeros(n_qubits, n_layers);
    const double pi = 3.14159265358979323846;
    for (double& v : p.theta) v = rng.uniform(-pi, pi);
    for (double& v : p.phi) v = rng.uniform(-pi, pi);
    return p;
}

std::vector<double> QnnParams::to_flat() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    flat.insert(flat.end(), theta.begin(), theta.end());
    flat.insert(flat.end(), phi.begin(), phi.end());
    return flat;
}

void QnnParams::from_flat(std::span<const double> flat) {
    if (flat.size() != param_count()) {
        throw std::invalid_argument("QnnParams::from_flat: expected " +
                                    std::to_string(param_count()) + " values, got " +
                                    std::to_string(flat.size()));
    }
    std::copy(flat.begin(), flat.begin() + theta_size(), theta.begin());
    std::copy(flat.begin() + theta_size(), flat.end(), phi.begin());
}

void QnnParams::validate() const {
    if (n_qubits < 1 || n_qubits > kMaxQubits || n_layers < 1) {
        throw config_error("QnnParams: bad shape (n_qubits=" + std::to_string(n_qubits) +
                           ", n_layers=" + std::to_string(n_layers) + ")");
    }
    if (theta.size() != theta_size() || phi.size() != phi_size()) {
        throw config_error("QnnParams: angle buffers do not match the declared shape");
    }
    for (double v : theta) {
        if (!std::isfinite(v)) throw config_error("QnnParams: non-finite theta");
    }
    for (double v : phi) {
        if (!std::isfinite(v)) throw config_error("QnnParams: non-finite phi");
    }
}

json QnnParams::to_json() const {
    return json{{"n_qubits", n_qubits},
                {"n_layers", n_layers},
                {"theta", theta},
                {"phi", phi}};
}

QnnParams QnnParams::from_json(const json& j) {
    QnnParams p;
    try {
        p.n_qubits = j.at("n_qubits").get<int>();
        p.n_layers = j.at("n_layers").get<int>();
        p.theta = j.at("theta").get<std::vector<double>>();
        p.phi = j.at("phi").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw data_error(std::string("QnnParams: invalid JSON: ") + e.what());
    }
    p.validate();
    return p;
}

std::vector<Su2Angles> encode_angles(std::span<const double> features) {
    if (features.empty()) throw std::invalid_argument("encode_angles: no features");
    const std::size_t units = (features.size() + 2) / 3;
    std::vector<Su2Angles> out(units);
    for (std::size_t i = 0; i < features.size(); ++i) {
        Su2Angles& a = out[i / 3];
        switch (i % 3) {
            case 0: a.alpha = features[i]; break;
            case 1: a.beta = features[i]; break;
            default: a.gamma = features[i]; break;
        }
    }
    return out;
}

EncodedPoint encode_point(std::span<const double> features) {
    static std::atomic<bool> warned{false};
    for (double v : features) {
        if (v < -1.0 || v > 1.0) {
            if (!warned.exchange(true)) {
                std::fprintf(stderr,
                             "nqk: warning: encoding feature %g outside [-1,1]; "
                             "scale inputs before encoding\n",
                             v);
            }
            break;
        }
    }
    EncodedPoint pt;
    pt.features.assign(features.begin(), features.end());
    pt.encoding_angles = encode_angles(features);
    pt.encoding_mats.reserve(pt.encoding_angles.size());
    for (const Su2Angles& a : pt.encoding_angles) pt.encoding_mats.push_back(su2_matrix(a));
    return pt;
}

std::vector<EncodedPoint> encode_rows(const FeatureTable& table) {
    std::vector<EncodedPoint> out;
    out.reserve(table.rows);
    for (std::size_t r = 0; r < table.rows; ++r) out.push_back(encode_point(table.row(r)));
    return out;
}

Statevector run_single_qubit_qnn(const QnnParams& params, const EncodedPoint& point) {
    if (params.n_qubits != 1) {
        throw std::invalid_argument("run_single_qubit_qnn: params must describe one qubit");
    }
    params.validate();
    Statevector state = Statevector::zero(1);
    for (int l = 0; l < params.n_layers; ++l) {
        for (const Mat2& enc : point.encoding_mats) apply_single_qubit(state, enc, 0);
        apply_single_qubit(state, su2_matrix(params.theta_angles(l, 0)), 0);
    }
    return state;
}

Statevector run_nqubit_qnn(const QnnParams& params, const EncodedPoint& point) {
    params.validate();
    const int n = params.n_qubits;
    Statevector state = Statevector::zero(n);
    for (int l = 0; l < params.n_layers; ++l) {
        for (const Mat2& enc : point.encoding_mats) {
            for (int q = 0; q < n; ++q) apply_single_qubit(state, enc, q);
        }
        for (int q = 0; q < n; ++q) {
            apply_single_qubit(state, su2_matrix(params.theta_angles(l, q)), q);
        }
        for (int c = 1; c < n; ++c) {
            apply_controlled(state, su2_matrix(params.phi_angles(l, c - 1)), c, 0);
        }
    }
    return state;
}

Statevector embed_1_to_n(const QnnParams& single_qubit_params, const EncodedPoint& point,
                         int n_qubits) {
    if (single_qubit_params.n_qubits != 1) {
        throw std::invalid_argument("embed_1_to_n: params must describe one qubit");
    }
    single_qubit_params.validate();
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw config_error("embed_1_to_n: n_qubits out of range");
    }
    Statevector state = Statevector::zero(n_qubits);
    for (int l = 0; l < single_qubit_params.n_layers; ++l) {
        for (const Mat2& enc : point.encoding_mats) {
            for (int q = 0; q < n_qubits; ++q) apply_single_qubit(state, enc, q);
        }
        const Mat2 trained = su2_matrix(single_qubit_params.theta_angles(l, 0));
        for (int q = 0; q < n_qubits; ++q) apply_single_qubit(state, trained, q);
        for (int s = 0; s + 1 < n_qubits; ++s) apply_cnot(state, s, s + 1);
    }
    return state;
}

QnnParams extend_params(const QnnParams& params, ExtendInit init, Rng* rng,
                        double noise_sigma) {
    params.validate();
    if (init == ExtendInit::CopyWithNoise && rng == nullptr) {
        throw std::invalid_argument("extend_params: noise init needs an Rng");
    }
    const int n = params.n_qubits + 1;
    QnnParams out = QnnParams::zeros(n, params.n_layers);
    for (int l = 0; l < params.n_layers; ++l) {
        for (int q = 0; q < params.n_qubits; ++q) {
            for (int a = 0; a < 3; ++a) out.theta_at(l, q, a) = params.theta_at(l, q, a);
        }
        for (int a = 0; a < 3; ++a) {
            double v = params.theta_at(l, 0, a);
            if (init == ExtendInit::CopyWithNoise) v += noise_sigma * rng->normal();
            out.theta_at(l, n - 1, a) = v;
        }
        for (int k = 0; k < params.n_qubits - 1; ++k) {
            for (int a = 0; a < 3; ++a) out.phi_at(l, k, a) = params.phi_at(l, k, a);
        }
        // New coupling angles stay exactly zero: the fresh qubit is decoupled.
    }
    return out;
}

}  // namespace nqk
