#include "nqk/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nqk/common.hpp"

namespace nqk {

SymEig jacobi_eigensymmetric(std::vector<double> a, std::size_t n, bool want_vectors) {
    if (n == 0 || a.size() != n * n) {
        throw std::invalid_argument("jacobi_eigensymmetric: bad matrix shape");
    }
    std::vector<double> v;
    if (want_vectors) {
        v.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    }

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) scale = std::max(scale, std::abs(a[i * n + j]));
    if (scale == 0.0) scale = 1.0;

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        if (std::sqrt(off) <= 1e-14 * scale * static_cast<double>(n)) break;
        if (sweep == max_sweeps - 1) {
            throw numerical_error("jacobi_eigensymmetric: did not converge");
        }

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) <= 1e-300) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                if (want_vectors) {
                    for (std::size_t k = 0; k < n; ++k) {
                        const double vkp = v[k * n + p];
                        const double vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return a[x * n + x] < a[y * n + y];
    });

    SymEig out;
    out.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.values[k] = a[order[k] * n + order[k]];
    if (want_vectors) {
        out.vectors.resize(n * n);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) out.vectors[k * n + i] = v[i * n + order[k]];
    }
    return out;
}

double min_symmetric_eigenvalue(const std::vector<double>& a, std::size_t n) {
    return jacobi_eigensymmetric(a, n, false).values.front();
}

bool is_psd_within(const std::vector<double>& a, std::size_t n, double shift) {
    if (n == 0 || a.size() != n * n) {
        throw std::invalid_argument("is_psd_within: bad matrix shape");
    }
    std::vector<double> l(a);
    for (std::size_t i = 0; i < n; ++i) l[i * n + i] += shift;
    for (std::size_t j = 0; j < n; ++j) {
        double d = l[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
        if (!(d > 0.0)) return false;
        const double diag = std::sqrt(d);
        l[j * n + j] = diag;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = l[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
            l[i * n + j] = s / diag;
        }
    }
    return true;
}

}  // namespace nqk
