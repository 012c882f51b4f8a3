#include "nqk/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nqk {

using json = nlohmann::json;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

GradientMethod gradient_method_from_string(const std::string& name) {
    if (name == "finite-diff") return GradientMethod::FiniteDiff;
    if (name == "parameter-shift") return GradientMethod::ParameterShift;
    if (name == "adjoint") return GradientMethod::Adjoint;
    throw config_error("unknown gradient method '" + name + "'");
}

const char* gradient_method_name(GradientMethod m) {
    switch (m) {
        case GradientMethod::FiniteDiff: return "finite-diff";
        case GradientMethod::ParameterShift: return "parameter-shift";
        case GradientMethod::Adjoint: return "adjoint";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw config_error("TrainConfig: learning_rate must be >= 0");
    }
    if (epochs < 0) throw config_error("TrainConfig: epochs must be >= 0");
    if (batch_size < 0) throw config_error("TrainConfig: batch_size must be >= 0");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        throw config_error("TrainConfig: Adam betas must lie in (0,1)");
    }
    if (!(adam_eps > 0.0)) throw config_error("TrainConfig: adam_eps must be > 0");
    if (!(fd_step > 0.0)) throw config_error("TrainConfig: fd_step must be > 0");
}

TrainConfig TrainConfig::optimal() {
    TrainConfig c;
    c.learning_rate = 0.01;
    c.epochs = 10;
    c.batch_size = 24;
    c.gradient_method = GradientMethod::Adjoint;
    return c;
}

TrainConfig TrainConfig::suboptimal() {
    TrainConfig c;
    c.learning_rate = 0.001;
    c.epochs = 2;
    c.batch_size = 24;
    c.gradient_method = GradientMethod::Adjoint;
    return c;
}

TrainConfig TrainConfig::scaling() {
    TrainConfig c;
    c.learning_rate = 0.005;
    c.epochs = 10;
    c.batch_size = 24;
    c.gradient_method = GradientMethod::Adjoint;
    return c;
}

json TrainConfig::to_json() const {
    return json{{"learning_rate", learning_rate},
                {"epochs", epochs},
                {"batch_size", batch_size},
                {"seed", seed},
                {"adam_beta1", adam_beta1},
                {"adam_beta2", adam_beta2},
                {"adam_eps", adam_eps},
                {"gradient_method", gradient_method_name(gradient_method)},
                {"fd_step", fd_step}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    if (j.contains("gradient_method")) {
        c.gradient_method = gradient_method_from_string(j["gradient_method"].get<std::string>());
    }
    c.fd_step = j.value("fd_step", c.fd_step);
    c.validate();
    return c;
}

LabeledPoints encode_table(const FeatureTable& table) {
    if (!table.labeled()) throw data_error("encode_table: table has no labels");
    LabeledPoints out;
    out.points = encode_rows(table);
    out.labels = table.labels;
    return out;
}

// ---------------------------------------------------------------------------
// Cost
// ---------------------------------------------------------------------------

namespace {

/// Gate matrices of a parameter set, built once and shared across the points
/// of a cost evaluation.
struct CompiledParams {
    int n_qubits = 1;
    int n_layers = 1;
    std::vector<Mat2> theta_mats;  // [layer][qubit]
    std::vector<Mat2> phi_mats;    // [layer][coupling]
};

CompiledParams compile_params(const QnnParams& params) {
    CompiledParams c;
    c.n_qubits = params.n_qubits;
    c.n_layers = params.n_layers;
    c.theta_mats.reserve(static_cast<std::size_t>(params.n_layers) * params.n_qubits);
    c.phi_mats.reserve(static_cast<std::size_t>(params.n_layers) * (params.n_qubits - 1));
    for (int l = 0; l < params.n_layers; ++l) {
        for (int q = 0; q < params.n_qubits; ++q) {
            c.theta_mats.push_back(su2_matrix(params.theta_angles(l, q)));
        }
    }
    for (int l = 0; l < params.n_layers; ++l) {
        for (int k = 0; k + 1 < params.n_qubits; ++k) {
            c.phi_mats.push_back(su2_matrix(params.phi_angles(l, k)));
        }
    }
    return c;
}

Statevector run_compiled(const CompiledParams& c, const EncodedPoint& point) {
    const int n = c.n_qubits;
    Statevector state = Statevector::zero(n);
    for (int l = 0; l < c.n_layers; ++l) {
        for (const Mat2& enc : point.encoding_mats) {
            for (int q = 0; q < n; ++q) apply_single_qubit(state, enc, q);
        }
        for (int q = 0; q < n; ++q) {
            apply_single_qubit(state, c.theta_mats[static_cast<std::size_t>(l) * n + q], q);
        }
        for (int ctl = 1; ctl < n; ++ctl) {
            apply_controlled(state, c.phi_mats[static_cast<std::size_t>(l) * (n - 1) + ctl - 1],
                             ctl, 0);
        }
    }
    return state;
}

double compiled_point_cost(const CompiledParams& c, const EncodedPoint& point, int label) {
    const double p0 = prob_first_qubit_zero(run_compiled(c, point));
    return label > 0 ? 1.0 - p0 : p0;
}

double compiled_subset_cost(const CompiledParams& c, const LabeledPoints& data,
                            std::span<const std::size_t> indices) {
    double acc = 0.0;
    for (std::size_t i : indices) {
        acc += compiled_point_cost(c, data.points[i], data.labels[i]);
    }
    return acc / static_cast<double>(indices.size());
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace

double point_cost(const QnnParams& params, const EncodedPoint& point, int label) {
    const double p0 = prob_first_qubit_zero(run_nqubit_qnn(params, point));
    return label > 0 ? 1.0 - p0 : p0;
}

double fidelity_cost(const QnnParams& params, const LabeledPoints& data) {
    if (data.size() == 0) throw data_error("fidelity_cost: empty dataset");
    params.validate();
    const CompiledParams c = compile_params(params);
    const std::size_t m = data.size();
    std::vector<double> terms(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        terms[i] = compiled_point_cost(c, data.points[i], data.labels[i]);
    }
    double acc = 0.0;
    for (double t : terms) acc += t;  // fixed order, thread-count independent
    return acc / static_cast<double>(m);
}

double fidelity_cost_serial(const QnnParams& params, const LabeledPoints& data) {
    if (data.size() == 0) throw data_error("fidelity_cost_serial: empty dataset");
    params.validate();
    const CompiledParams c = compile_params(params);
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        acc += compiled_point_cost(c, data.points[i], data.labels[i]);
    }
    return acc / static_cast<double>(data.size());
}

double fidelity_cost_subset(const QnnParams& params, const LabeledPoints& data,
                            std::span<const std::size_t> indices) {
    if (indices.empty()) throw data_error("fidelity_cost_subset: empty batch");
    params.validate();
    return compiled_subset_cost(compile_params(params), data, indices);
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

namespace {

/// Rebuilds the single gate matrix affected by shifting flat parameter j.
void refresh_gate(CompiledParams& c, const QnnParams& params, std::size_t j) {
    const std::size_t theta_size = params.theta_size();
    if (j < theta_size) {
        const std::size_t gate = j / 3;
        const int l = static_cast<int>(gate) / params.n_qubits;
        const int q = static_cast<int>(gate) % params.n_qubits;
        c.theta_mats[gate] = su2_matrix(params.theta_angles(l, q));
    } else {
        const std::size_t gate = (j - theta_size) / 3;
        const int l = static_cast<int>(gate) / (params.n_qubits - 1);
        const int k = static_cast<int>(gate) % (params.n_qubits - 1);
        c.phi_mats[gate] = su2_matrix(params.phi_angles(l, k));
    }
}

double shifted_cost(const QnnParams& params, const CompiledParams& base,
                    const std::vector<double>& flat, std::size_t j, double delta,
                    const LabeledPoints& data, std::span<const std::size_t> indices) {
    QnnParams shifted = params;
    std::vector<double> f = flat;
    f[j] += delta;
    shifted.from_flat(f);
    CompiledParams c = base;
    refresh_gate(c, shifted, j);
    return compiled_subset_cost(c, data, indices);
}

std::vector<double> fd_gradient(const QnnParams& params, const LabeledPoints& data,
                                std::span<const std::size_t> indices, double h,
                                bool parallel) {
    const std::vector<double> flat = params.to_flat();
    const CompiledParams base = compile_params(params);
    const std::size_t p = flat.size();
    std::vector<double> grad(p);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(p); ++j) {
        const double up = shifted_cost(params, base, flat, j, +h, data, indices);
        const double down = shifted_cost(params, base, flat, j, -h, data, indices);
        grad[j] = (up - down) / (2.0 * h);
    }
    return grad;
}

std::vector<double> ps_gradient(const QnnParams& params, const LabeledPoints& data,
                                std::span<const std::size_t> indices, bool parallel) {
    const std::vector<double> flat = params.to_flat();
    const CompiledParams base = compile_params(params);
    const std::size_t p = flat.size();
    const std::size_t theta_size = params.theta_size();
    // Four-term coefficients for controlled rotations.
    const double d_plus = (std::sqrt(2.0) + 1.0) / (4.0 * std::sqrt(2.0));
    const double d_minus = (std::sqrt(2.0) - 1.0) / (4.0 * std::sqrt(2.0));
    std::vector<double> grad(p);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(p); ++j) {
        const double up = shifted_cost(params, base, flat, j, kPi / 2.0, data, indices);
        const double down = shifted_cost(params, base, flat, j, -kPi / 2.0, data, indices);
        if (static_cast<std::size_t>(j) < theta_size) {
            grad[j] = (up - down) / 2.0;
        } else {
            const double up3 = shifted_cost(params, base, flat, j, 3.0 * kPi / 2.0, data, indices);
            const double down3 =
                shifted_cost(params, base, flat, j, -3.0 * kPi / 2.0, data, indices);
            grad[j] = d_plus * (up - down) - d_minus * (up3 - down3);
        }
    }
    return grad;
}

// --- adjoint ---------------------------------------------------------------

/// One gate of the decomposed circuit: trainable su2 gates are split into
/// Rz(alpha), Ry(beta), Rz(gamma) so every op carries at most one parameter.
struct CircuitOp {
    Mat2 mat;
    int target = 0;
    int control = -1;  // -1: uncontrolled
    int param = -1;    // flat parameter index, -1 for encoding gates
    int axis = 0;      // 0 = Z, 1 = Y
};

std::vector<CircuitOp> build_circuit(const QnnParams& params, const EncodedPoint& point) {
    const int n = params.n_qubits;
    std::vector<CircuitOp> ops;
    const std::size_t per_layer =
        point.encoding_mats.size() * n + static_cast<std::size_t>(n) * 3 +
        static_cast<std::size_t>(n - 1) * 3;
    ops.reserve(per_layer * params.n_layers);
    for (int l = 0; l < params.n_layers; ++l) {
        for (const Mat2& enc : point.encoding_mats) {
            for (int q = 0; q < n; ++q) ops.push_back({enc, q, -1, -1, 0});
        }
        for (int q = 0; q < n; ++q) {
            const int base = static_cast<int>((static_cast<std::size_t>(l) * n + q) * 3);
            const Su2Angles a = params.theta_angles(l, q);
            ops.push_back({rz_matrix(a.alpha), q, -1, base + 0, 0});
            ops.push_back({ry_matrix(a.beta), q, -1, base + 1, 1});
            ops.push_back({rz_matrix(a.gamma), q, -1, base + 2, 0});
        }
        for (int ctl = 1; ctl < n; ++ctl) {
            const int base = static_cast<int>(
                params.theta_size() +
                (static_cast<std::size_t>(l) * (n - 1) + (ctl - 1)) * 3);
            const Su2Angles a = params.phi_angles(l, ctl - 1);
            ops.push_back({rz_matrix(a.alpha), 0, ctl, base + 0, 0});
            ops.push_back({ry_matrix(a.beta), 0, ctl, base + 1, 1});
            ops.push_back({rz_matrix(a.gamma), 0, ctl, base + 2, 0});
        }
    }
    return ops;
}

void apply_op(Statevector& state, const CircuitOp& op, bool inverse) {
    const Mat2 m = inverse ? op.mat.dagger() : op.mat;
    if (op.control < 0) {
        apply_single_qubit(state, m, op.target);
    } else {
        apply_controlled(state, m, op.control, op.target);
    }
}

/// <lam| G |phi> with G = (1/2) * Pauli(axis) on the target wire, restricted
/// to the control-1 subspace for controlled ops.
cplx generator_overlap(const Statevector& lam, const Statevector& phi, const CircuitOp& op) {
    const std::size_t tmask = std::size_t{1} << op.target;
    const std::size_t cmask = op.control >= 0 ? (std::size_t{1} << op.control) : 0;
    cplx acc{0.0, 0.0};
    const std::size_t dim = phi.dim();
    if (op.axis == 0) {  // Z: diag(+1,-1) on the target bit
        for (std::size_t i = 0; i < dim; ++i) {
            if (cmask && !(i & cmask)) continue;
            const double sign = (i & tmask) ? -1.0 : 1.0;
            acc += std::conj(lam.amp[i]) * phi.amp[i] * sign;
        }
    } else {  // Y: (Y phi)_0 = -i phi_1, (Y phi)_1 = i phi_0 on target pairs
        const cplx im{0.0, 1.0};
        for (std::size_t i0 = 0; i0 < dim; ++i0) {
            if (i0 & tmask) continue;
            if (cmask && !(i0 & cmask)) continue;
            const std::size_t i1 = i0 | tmask;
            acc += std::conj(lam.amp[i0]) * (-im * phi.amp[i1]);
            acc += std::conj(lam.amp[i1]) * (im * phi.amp[i0]);
        }
    }
    return 0.5 * acc;
}

/// Reverse-pass derivative of E = <psi|P0|psi> for the decomposed circuit.
/// Writes dE/dparam into grad (must be zero-initialized, length P).
void adjoint_observable_gradient(const std::vector<CircuitOp>& ops, int n_qubits,
                                 std::vector<double>& grad) {
    Statevector phi = Statevector::zero(n_qubits);
    for (const CircuitOp& op : ops) apply_op(phi, op, false);

    // lam = P0 |phi>: zero the odd-index (first qubit = |1>) amplitudes.
    Statevector lam = phi;
    for (std::size_t i = 1; i < lam.dim(); i += 2) lam.amp[i] = cplx{0.0, 0.0};

    for (std::size_t g = ops.size(); g-- > 0;) {
        const CircuitOp& op = ops[g];
        apply_op(phi, op, true);
        apply_op(lam, op, true);
        if (op.param >= 0) {
            grad[op.param] += 2.0 * std::imag(generator_overlap(lam, phi, op));
        }
    }
}

std::vector<double> adjoint_gradient(const QnnParams& params, const LabeledPoints& data,
                                     std::span<const std::size_t> indices, bool parallel) {
    const std::size_t p = params.param_count();
    const std::size_t b = indices.size();
    std::vector<std::vector<double>> per_point(b);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(b); ++k) {
        const std::size_t i = indices[k];
        std::vector<double> g(p, 0.0);
        adjoint_observable_gradient(build_circuit(params, data.points[i]),
                                    params.n_qubits, g);
        // cost = 1 - E for label +1, cost = E for label -1
        const double sign = data.labels[i] > 0 ? -1.0 : 1.0;
        for (double& v : g) v *= sign;
        per_point[k] = std::move(g);
    }
    std::vector<double> grad(p, 0.0);
    for (const auto& g : per_point) {
        for (std::size_t j = 0; j < p; ++j) grad[j] += g[j];
    }
    const double inv = 1.0 / static_cast<double>(b);
    for (double& v : grad) v *= inv;
    return grad;
}

std::vector<double> gradient_impl(const QnnParams& params, const LabeledPoints& data,
                                  std::span<const std::size_t> indices,
                                  const TrainConfig& config, bool parallel) {
    if (indices.empty()) throw data_error("gradient: empty batch");
    params.validate();
    switch (config.gradient_method) {
        case GradientMethod::FiniteDiff:
            return fd_gradient(params, data, indices, config.fd_step, parallel);
        case GradientMethod::ParameterShift:
            return ps_gradient(params, data, indices, parallel);
        case GradientMethod::Adjoint:
            return adjoint_gradient(params, data, indices, parallel);
    }
    throw config_error("gradient: unknown method");
}

}  // namespace

std::vector<double> gradient(const QnnParams& params, const LabeledPoints& data,
                             const TrainConfig& config) {
    const std::vector<std::size_t> idx = all_indices(data.size());
    return gradient_impl(params, data, idx, config, true);
}

std::vector<double> gradient_subset(const QnnParams& params, const LabeledPoints& data,
                                    std::span<const std::size_t> indices,
                                    const TrainConfig& config) {
    return gradient_impl(params, data, indices, config, true);
}

std::vector<double> gradient_serial(const QnnParams& params, const LabeledPoints& data,
                                    const TrainConfig& config) {
    const std::vector<std::size_t> idx = all_indices(data.size());
    return gradient_impl(params, data, idx, config, false);
}

// ---------------------------------------------------------------------------
// Adam and the training loop
// ---------------------------------------------------------------------------

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad, const TrainConfig& config) {
    if (state.m.size() != params.size() || grad.size() != params.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    state.t += 1;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
}

json TrainHistory::to_json() const {
    return json{{"cost_per_epoch", cost_per_epoch},
                {"best_cost", best_cost},
                {"best_params", best_params.to_json()}};
}

TrainHistory TrainHistory::from_json(const json& j) {
    TrainHistory h;
    try {
        h.cost_per_epoch = j.at("cost_per_epoch").get<std::vector<double>>();
        h.best_cost = j.at("best_cost").get<double>();
        h.best_params = QnnParams::from_json(j.at("best_params"));
    } catch (const json::exception& e) {
        throw data_error(std::string("TrainHistory: invalid JSON: ") + e.what());
    }
    return h;
}

TrainHistory train_qnn(const QnnParams& init, const LabeledPoints& data,
                       const TrainConfig& config) {
    config.validate();
    init.validate();
    if (data.size() == 0) throw data_error("train_qnn: empty dataset");
    if (data.labels.size() != data.points.size()) {
        throw data_error("train_qnn: label/point count mismatch");
    }

    QnnParams params = init;
    std::vector<double> flat = params.to_flat();
    AdamState adam(flat.size());
    Rng rng(mix_seed(config.seed, 0x74726169ull));

    TrainHistory history;
    history.cost_per_epoch.push_back(fidelity_cost(params, data));
    history.best_cost = history.cost_per_epoch.front();
    history.best_params = params;

    const std::size_t m = data.size();
    const std::size_t batch =
        config.batch_size <= 0 ? m : std::min<std::size_t>(config.batch_size, m);
    std::vector<std::size_t> order = all_indices(m);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch < m) rng.shuffle(order);
        for (std::size_t start = 0; start < m; start += batch) {
            const std::size_t len = std::min(batch, m - start);
            const std::span<const std::size_t> idx(order.data() + start, len);
            const std::vector<double> g = gradient_subset(params, data, idx, config);
            adam_step(adam, flat, g, config);
            params.from_flat(flat);
        }
        const double cost = fidelity_cost(params, data);
        history.cost_per_epoch.push_back(cost);
        if (cost < history.best_cost) {
            history.best_cost = cost;
            history.best_params = params;
        }
    }
    return history;
}

int label_from_prob(double p0) { return p0 > 0.5 ? +1 : -1; }

int qnn_predict(const QnnParams& params, const EncodedPoint& point) {
    return label_from_prob(prob_first_qubit_zero(run_nqubit_qnn(params, point)));
}

double qnn_accuracy(const QnnParams& params, const LabeledPoints& data) {
    if (data.size() == 0) throw data_error("qnn_accuracy: empty dataset");
    params.validate();
    const CompiledParams c = compile_params(params);
    const std::size_t m = data.size();
    std::vector<std::uint8_t> hits(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        const double p0 = prob_first_qubit_zero(run_compiled(c, data.points[i]));
        hits[i] = label_from_prob(p0) == data.labels[i] ? 1 : 0;
    }
    std::size_t correct = 0;
    for (std::uint8_t h : hits) correct += h;
    return static_cast<double>(correct) / static_cast<double>(m);
}

std::vector<TrainHistory> scale_qnn(const LabeledPoints& data, int n_max, int n_layers,
                                    const TrainConfig& config, ExtendInit init) {
    config.validate();
    if (n_max < 1 || n_max > kMaxQubits) {
        throw config_error("scale_qnn: n_max must be in [1, " + std::to_string(kMaxQubits) + "]");
    }
    Rng init_rng(mix_seed(config.seed, 0x696e6974ull));
    Rng noise_rng(mix_seed(config.seed, 0x6e6f6973ull));

    std::vector<TrainHistory> histories;
    histories.reserve(static_cast<std::size_t>(n_max));
    QnnParams params = QnnParams::random_init(1, n_layers, init_rng);
    for (int n = 1; n <= n_max; ++n) {
        if (n > 1) {
            params = extend_params(histories.back().best_params, init, &noise_rng);
        }
        TrainConfig stage = config;
        stage.seed = mix_seed(config.seed, 0x73746167ull + static_cast<std::uint64_t>(n));
        histories.push_back(train_qnn(params, data, stage));
    }
    return histories;
}

}  // namespace nqk
