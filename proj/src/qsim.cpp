#include "nqk/qsim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nqk {

Mat2 Mat2::operator*(const Mat2& rhs) const {
    return Mat2{a00 * rhs.a00 + a01 * rhs.a10, a00 * rhs.a01 + a01 * rhs.a11,
                a10 * rhs.a00 + a11 * rhs.a10, a10 * rhs.a01 + a11 * rhs.a11};
}

Mat2 Mat2::dagger() const {
    return Mat2{std::conj(a00), std::conj(a10), std::conj(a01), std::conj(a11)};
}

Mat2 rz_matrix(double t) {
    return Mat2{std::polar(1.0, -t / 2.0), 0.0, 0.0, std::polar(1.0, t / 2.0)};
}

Mat2 ry_matrix(double t) {
    const double c = std::cos(t / 2.0);
    const double s = std::sin(t / 2.0);
    return Mat2{c, -s, s, c};
}

Mat2 x_matrix() { return Mat2{0.0, 1.0, 1.0, 0.0}; }

Mat2 su2_matrix(const Su2Angles& angles) {
    // Closed form of Rz(gamma) * Ry(beta) * Rz(alpha).
    const double c = std::cos(angles.beta / 2.0);
    const double s = std::sin(angles.beta / 2.0);
    const double plus = (angles.alpha + angles.gamma) / 2.0;
    const double minus = (angles.alpha - angles.gamma) / 2.0;
    return Mat2{c * std::polar(1.0, -plus), -s * std::polar(1.0, minus),
                s * std::polar(1.0, -minus), c * std::polar(1.0, plus)};
}

Statevector Statevector::zero(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw config_error("Statevector: n_qubits must be in [1, " +
                           std::to_string(kMaxQubits) + "], got " +
                           std::to_string(n_qubits));
    }
    Statevector s;
    s.n_qubits = n_qubits;
    s.amp.assign(std::size_t{1} << n_qubits, cplx{0.0, 0.0});
    s.amp[0] = cplx{1.0, 0.0};
    return s;
}

double Statevector::norm_sq() const {
    double acc = 0.0;
    for (const cplx& a : amp) acc += std::norm(a);
    return acc;
}

namespace {

void check_wire(const Statevector& state, int wire, const char* what) {
    if (wire < 0 || wire >= state.n_qubits) {
        throw std::invalid_argument(std::string(what) + " qubit index " +
                                    std::to_string(wire) + " out of range for " +
                                    std::to_string(state.n_qubits) + " qubits");
    }
}

}  // namespace

void apply_single_qubit(Statevector& state, const Mat2& gate, int target) {
    check_wire(state, target, "target");
    const std::size_t mask = std::size_t{1} << target;
    const std::size_t lo = mask - 1;
    const std::size_t hi = ~lo;
    const std::size_t half = state.dim() >> 1;
    cplx* amp = state.amp.data();
    for (std::size_t k = 0; k < half; ++k) {
        const std::size_t i0 = ((k & hi) << 1) | (k & lo);
        const std::size_t i1 = i0 | mask;
        const cplx a = amp[i0];
        const cplx b = amp[i1];
        amp[i0] = gate.a00 * a + gate.a01 * b;
        amp[i1] = gate.a10 * a + gate.a11 * b;
    }
}

void apply_controlled(Statevector& state, const Mat2& gate, int control, int target) {
    check_wire(state, control, "control");
    check_wire(state, target, "target");
    if (control == target) {
        throw std::invalid_argument("apply_controlled: control == target (" +
                                    std::to_string(control) + ")");
    }
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    const int min_q = control < target ? control : target;
    const int max_q = control < target ? target : control;
    const std::size_t lo = (std::size_t{1} << min_q) - 1;
    const std::size_t mid = ((std::size_t{1} << (max_q - 1)) - 1) ^ lo;
    const std::size_t hi = ~(lo | mid);
    const std::size_t quarter = state.dim() >> 2;
    cplx* amp = state.amp.data();
    for (std::size_t k = 0; k < quarter; ++k) {
        const std::size_t base = ((k & hi) << 2) | ((k & mid) << 1) | (k & lo);
        const std::size_t i0 = base | cmask;          // control 1, target 0
        const std::size_t i1 = base | cmask | tmask;  // control 1, target 1
        const cplx a = amp[i0];
        const cplx b = amp[i1];
        amp[i0] = gate.a00 * a + gate.a01 * b;
        amp[i1] = gate.a10 * a + gate.a11 * b;
    }
}

void apply_cnot(Statevector& state, int control, int target) {
    check_wire(state, control, "control");
    check_wire(state, target, "target");
    if (control == target) {
        throw std::invalid_argument("apply_cnot: control == target (" +
                                    std::to_string(control) + ")");
    }
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    const int min_q = control < target ? control : target;
    const int max_q = control < target ? target : control;
    const std::size_t lo = (std::size_t{1} << min_q) - 1;
    const std::size_t mid = ((std::size_t{1} << (max_q - 1)) - 1) ^ lo;
    const std::size_t hi = ~(lo | mid);
    const std::size_t quarter = state.dim() >> 2;
    cplx* amp = state.amp.data();
    for (std::size_t k = 0; k < quarter; ++k) {
        const std::size_t base = ((k & hi) << 2) | ((k & mid) << 1) | (k & lo);
        std::swap(amp[base | cmask], amp[base | cmask | tmask]);
    }
}

double prob_first_qubit_zero(const Statevector& state) {
    double acc = 0.0;
    const std::size_t n = state.dim();
    for (std::size_t i = 0; i < n; i += 2) acc += std::norm(state.amp[i]);
    return acc;
}

double fidelity(const Statevector& a, const Statevector& b) {
    if (a.n_qubits != b.n_qubits || a.dim() != b.dim()) {
        throw std::invalid_argument("fidelity: dimension mismatch (" +
                                    std::to_string(a.n_qubits) + " vs " +
                                    std::to_string(b.n_qubits) + " qubits)");
    }
    cplx inner{0.0, 0.0};
    const std::size_t n = a.dim();
    for (std::size_t i = 0; i < n; ++i) inner += std::conj(a.amp[i]) * b.amp[i];
    return std::norm(inner);
}

}  // namespace nqk
