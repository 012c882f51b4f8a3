// Test-only reference implementations. Everything here is deliberately
// independent of the library's computation paths: dense matrix products for
// circuit checks, projected-gradient ascent for the SVM dual, one-sided
// Jacobi SVD for the reduction checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <nqk/common.hpp>
#include <nqk/qsim.hpp>
#include <nqk/reupload.hpp>

namespace oracle {

using nqk::cplx;

// --- dense complex matrices -------------------------------------------------

struct DenseMatrix {
    std::size_t dim = 0;
    std::vector<cplx> a;  // row-major dim*dim

    static DenseMatrix identity(std::size_t dim) {
        DenseMatrix m;
        m.dim = dim;
        m.a.assign(dim * dim, cplx{0.0, 0.0});
        for (std::size_t i = 0; i < dim; ++i) m.a[i * dim + i] = cplx{1.0, 0.0};
        return m;
    }

    cplx at(std::size_t r, std::size_t c) const { return a[r * dim + c]; }
    cplx& at(std::size_t r, std::size_t c) { return a[r * dim + c]; }
};

inline DenseMatrix matmul(const DenseMatrix& x, const DenseMatrix& y) {
    DenseMatrix out;
    out.dim = x.dim;
    out.a.assign(x.dim * x.dim, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < x.dim; ++i) {
        for (std::size_t k = 0; k < x.dim; ++k) {
            const cplx v = x.at(i, k);
            if (v == cplx{0.0, 0.0}) continue;
            for (std::size_t j = 0; j < x.dim; ++j) out.at(i, j) += v * y.at(k, j);
        }
    }
    return out;
}

inline std::vector<cplx> matvec(const DenseMatrix& m, const std::vector<cplx>& v) {
    std::vector<cplx> out(m.dim, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < m.dim; ++i) {
        for (std::size_t j = 0; j < m.dim; ++j) out[i] += m.at(i, j) * v[j];
    }
    return out;
}

inline DenseMatrix kron(const DenseMatrix& slow, const DenseMatrix& fast) {
    DenseMatrix out;
    out.dim = slow.dim * fast.dim;
    out.a.assign(out.dim * out.dim, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < slow.dim; ++i) {
        for (std::size_t j = 0; j < slow.dim; ++j) {
            for (std::size_t k = 0; k < fast.dim; ++k) {
                for (std::size_t l = 0; l < fast.dim; ++l) {
                    out.at(i * fast.dim + k, j * fast.dim + l) = slow.at(i, j) * fast.at(k, l);
                }
            }
        }
    }
    return out;
}

inline DenseMatrix mat2_to_dense(const nqk::Mat2& g) {
    DenseMatrix m;
    m.dim = 2;
    m.a = {g.a00, g.a01, g.a10, g.a11};
    return m;
}

// Single-qubit gate on wire `target` of an n-qubit register (qubit 0 = least
// significant bit): I_{2^(n-1-t)} (x) U (x) I_{2^t}.
inline DenseMatrix dense_single(const nqk::Mat2& g, int target, int n_qubits) {
    DenseMatrix m = DenseMatrix::identity(std::size_t{1} << target);
    m = kron(mat2_to_dense(g), m);
    m = kron(DenseMatrix::identity(std::size_t{1} << (n_qubits - 1 - target)), m);
    return m;
}

// Controlled gate built entry by entry from the definition.
inline DenseMatrix dense_controlled(const nqk::Mat2& g, int control, int target, int n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    DenseMatrix m;
    m.dim = dim;
    m.a.assign(dim * dim, cplx{0.0, 0.0});
    for (std::size_t col = 0; col < dim; ++col) {
        if (!(col & cmask)) {
            m.at(col, col) = cplx{1.0, 0.0};
            continue;
        }
        const std::size_t r0 = col & ~tmask;
        const std::size_t r1 = col | tmask;
        if (col & tmask) {
            m.at(r0, col) += g.a01;
            m.at(r1, col) += g.a11;
        } else {
            m.at(r0, col) += g.a00;
            m.at(r1, col) += g.a10;
        }
    }
    return m;
}

// --- dense circuit builders ----------------------------------------------------
//
// Gate-by-gate dense products mirroring the circuit definitions; they check
// composition order and wire placement independently of the statevector path.

inline DenseMatrix dense_qnn(const nqk::QnnParams& params, const nqk::EncodedPoint& pt) {
    const int n = params.n_qubits;
    DenseMatrix m = DenseMatrix::identity(std::size_t{1} << n);
    auto lmul = [&](const DenseMatrix& g) { m = matmul(g, m); };
    for (int l = 0; l < params.n_layers; ++l) {
        for (const nqk::Mat2& enc : pt.encoding_mats) {
            for (int q = 0; q < n; ++q) lmul(dense_single(enc, q, n));
        }
        for (int q = 0; q < n; ++q) {
            lmul(dense_single(nqk::su2_matrix(params.theta_angles(l, q)), q, n));
        }
        for (int c = 1; c < n; ++c) {
            lmul(dense_controlled(nqk::su2_matrix(params.phi_angles(l, c - 1)), c, 0, n));
        }
    }
    return m;
}

inline DenseMatrix dense_1_to_n(const nqk::QnnParams& p1, const nqk::EncodedPoint& pt, int n) {
    DenseMatrix m = DenseMatrix::identity(std::size_t{1} << n);
    auto lmul = [&](const DenseMatrix& g) { m = matmul(g, m); };
    for (int l = 0; l < p1.n_layers; ++l) {
        for (const nqk::Mat2& enc : pt.encoding_mats) {
            for (int q = 0; q < n; ++q) lmul(dense_single(enc, q, n));
        }
        const nqk::Mat2 u = nqk::su2_matrix(p1.theta_angles(l, 0));
        for (int q = 0; q < n; ++q) lmul(dense_single(u, q, n));
        for (int s = 0; s + 1 < n; ++s) {
            lmul(dense_controlled(nqk::x_matrix(), s, s + 1, n));
        }
    }
    return m;
}

inline std::vector<cplx> basis_zero(int n) {
    std::vector<cplx> v(std::size_t{1} << n, cplx{0.0, 0.0});
    v[0] = cplx{1.0, 0.0};
    return v;
}

// --- random states and angles -------------------------------------------------

inline nqk::Statevector random_state(int n_qubits, nqk::Rng& rng) {
    nqk::Statevector s = nqk::Statevector::zero(n_qubits);
    double norm = 0.0;
    for (cplx& a : s.amp) {
        a = cplx{rng.normal(), rng.normal()};
        norm += std::norm(a);
    }
    norm = std::sqrt(norm);
    for (cplx& a : s.amp) a /= norm;
    return s;
}

inline nqk::Su2Angles random_angles(nqk::Rng& rng) {
    const double pi = 3.14159265358979323846;
    return {rng.uniform(-pi, pi), rng.uniform(-pi, pi), rng.uniform(-pi, pi)};
}

inline double max_amp_diff(const nqk::Statevector& s, const std::vector<cplx>& v) {
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        worst = std::max(worst, std::abs(s.amp[i] - v[i]));
    }
    return worst;
}

// --- reference QP solver for the soft-margin dual ------------------------------
//
// Projected gradient ascent on f(a) = e'a - 1/2 a'Qa over the feasible set
// {0 <= a <= C, y'a = 0}, with exact projection via bisection on the equality
// multiplier. Slow and simple; used on small instances only.

struct RefQp {
    std::vector<double> alpha;
    double objective = 0.0;
};

inline RefQp reference_svm_dual(const std::vector<double>& kernel, std::size_t m,
                                const std::vector<int>& y, double c_box,
                                int iters = 200000) {
    auto project = [&](std::vector<double> a) {
        double lo = -1e9, hi = 1e9;
        for (int it = 0; it < 200; ++it) {
            const double lambda = 0.5 * (lo + hi);
            double dot = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double v = std::clamp(a[i] - lambda * y[i], 0.0, c_box);
                dot += y[i] * v;
            }
            if (dot > 0.0) {
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
        const double lambda = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < m; ++i) {
            a[i] = std::clamp(a[i] - lambda * y[i], 0.0, c_box);
        }
        return a;
    };

    double qnorm = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) row += std::abs(kernel[i * m + j]);
        qnorm = std::max(qnorm, row);
    }
    const double step = 1.0 / std::max(qnorm, 1.0);

    std::vector<double> alpha(m, 0.0);
    for (int it = 0; it < iters; ++it) {
        std::vector<double> grad(m, 1.0);
        for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                acc += y[i] * y[j] * kernel[i * m + j] * alpha[j];
            }
            grad[i] -= acc;
        }
        for (std::size_t i = 0; i < m; ++i) alpha[i] += step * grad[i];
        alpha = project(alpha);
    }

    RefQp out;
    out.alpha = alpha;
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        lin += alpha[i];
        for (std::size_t j = 0; j < m; ++j) {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i * m + j];
        }
    }
    out.objective = lin - 0.5 * quad;
    return out;
}

// --- one-sided Jacobi SVD -------------------------------------------------------
//
// Orthogonalizes column pairs of the data matrix; singular values are the
// final column norms. Independent of the library's symmetric eigensolver.

inline std::vector<double> singular_values(std::vector<double> x, std::size_t rows,
                                           std::size_t cols) {
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < cols; ++p) {
            for (std::size_t q = p + 1; q < cols; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t r = 0; r < rows; ++r) {
                    app += x[r * cols + p] * x[r * cols + p];
                    aqq += x[r * cols + q] * x[r * cols + q];
                    apq += x[r * cols + p] * x[r * cols + q];
                }
                off = std::max(off, std::abs(apq));
                if (std::abs(apq) < 1e-15 * std::sqrt(app * aqq) || apq == 0.0) continue;
                const double theta = 0.5 * std::atan2(2.0 * apq, app - aqq);
                const double c = std::cos(theta), s = std::sin(theta);
                for (std::size_t r = 0; r < rows; ++r) {
                    const double vp = x[r * cols + p];
                    const double vq = x[r * cols + q];
                    x[r * cols + p] = c * vp + s * vq;
                    x[r * cols + q] = -s * vp + c * vq;
                }
            }
        }
        if (off < 1e-14) break;
    }
    std::vector<double> sv(cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) acc += x[r * cols + c] * x[r * cols + c];
        sv[c] = std::sqrt(acc);
    }
    std::sort(sv.rbegin(), sv.rend());
    return sv;
}

}  // namespace oracle
