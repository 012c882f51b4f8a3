#pragma once

#include <cstddef>
#include <vector>

#include "nqk/common.hpp"

namespace nqk {

/// Dense simulation only; 2^12 amplitudes is the configured ceiling (the
/// experiments need 8 qubits at most).
inline constexpr int kMaxQubits = 12;

/// ZYZ Euler angles of a single-qubit unitary, in radians.
struct Su2Angles {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

/// Row-major 2x2 complex matrix. Defaults to the identity.
struct Mat2 {
    cplx a00{1.0, 0.0}, a01{0.0, 0.0};
    cplx a10{0.0, 0.0}, a11{0.0, 0.0};

    Mat2() : a11{1.0, 0.0} {}
    Mat2(cplx m00, cplx m01, cplx m10, cplx m11)
        : a00(m00), a01(m01), a10(m10), a11(m11) {}

    Mat2 operator*(const Mat2& rhs) const;
    Mat2 dagger() const;
};

/// Rz(t) = diag(e^{-it/2}, e^{it/2})
Mat2 rz_matrix(double t);

/// Ry(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]
Mat2 ry_matrix(double t);

/// Pauli X.
Mat2 x_matrix();

/// Generic SU(2) unitary in the ZYZ factorization:
///   U(alpha, beta, gamma) = Rz(gamma) * Ry(beta) * Rz(alpha).
Mat2 su2_matrix(const Su2Angles& angles);

/// Complex amplitude vector over n qubits.
///
/// Basis convention: qubit 0 is the least significant bit of the amplitude
/// index, and it is the "first" (measured) qubit everywhere in this library.
struct Statevector {
    int n_qubits = 0;
    std::vector<cplx> amp;

    /// |0...0> on n_qubits wires. Throws config_error outside [1, kMaxQubits].
    static Statevector zero(int n_qubits);

    std::size_t dim() const { return amp.size(); }
    double norm_sq() const;
};

/// Applies `gate` to the target wire, in place. Norm is preserved for
/// unitary gates.
void apply_single_qubit(Statevector& state, const Mat2& gate, int target);

/// Applies `gate` to the target wire on the subspace where the control wire
/// is |1>, identity elsewhere. Throws std::invalid_argument when control and
/// target coincide or are out of range.
void apply_controlled(Statevector& state, const Mat2& gate, int control, int target);

/// CNOT via direct amplitude swaps; equivalent to apply_controlled with X.
void apply_cnot(Statevector& state, int control, int target);

/// Probability that a measurement of qubit 0 yields |0>: the sum of
/// |amplitude|^2 over basis states with an even index.
double prob_first_qubit_zero(const Statevector& state);

/// |<a|b>|^2. Symmetric, insensitive to global phase of either argument.
/// Throws std::invalid_argument on dimension mismatch.
double fidelity(const Statevector& a, const Statevector& b);

}  // namespace nqk
