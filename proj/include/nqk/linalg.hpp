#pragma once

#include <cstddef>
#include <vector>

namespace nqk {

/// Eigendecomposition of a dense symmetric matrix, eigenvalues ascending.
/// vectors (when requested) are row-major: vectors[k*n + i] is component i of
/// the eigenvector for values[k].
struct SymEig {
    std::vector<double> values;
    std::vector<double> vectors;
};

/// Cyclic Jacobi rotations. Intended for the moderate sizes this project
/// needs (covariance matrices up to 64x64, Gram matrices up to a few
/// hundred). Throws numerical_error if the sweep cap is hit.
SymEig jacobi_eigensymmetric(std::vector<double> a, std::size_t n, bool want_vectors);

/// Smallest eigenvalue of a dense symmetric matrix.
double min_symmetric_eigenvalue(const std::vector<double>& a, std::size_t n);

/// True when a + shift*I admits a Cholesky factorization, i.e. the smallest
/// eigenvalue of `a` exceeds -shift (up to roundoff). O(n^3/3), the cheap PSD
/// probe for large kernel matrices.
bool is_psd_within(const std::vector<double>& a, std::size_t n, double shift);

}  // namespace nqk
