#include <doctest.h>

#include <cmath>

#include <nqk/qsim.hpp>

#include "oracles.hpp"

using namespace nqk;
using oracle::DenseMatrix;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Independent 2x2 product of the three factor matrices.
Mat2 zyz_by_factors(const Su2Angles& a) {
    return rz_matrix(a.gamma) * (ry_matrix(a.beta) * rz_matrix(a.alpha));
}

double mat_diff(const Mat2& x, const Mat2& y) {
    return std::max({std::abs(x.a00 - y.a00), std::abs(x.a01 - y.a01),
                     std::abs(x.a10 - y.a10), std::abs(x.a11 - y.a11)});
}
}  // namespace

TEST_CASE("su2_matrix fixed examples") {
    const Mat2 id = su2_matrix({0.0, 0.0, 0.0});
    CHECK(mat_diff(id, Mat2{}) < 1e-15);

    const Mat2 ry_pi = su2_matrix({0.0, kPi, 0.0});
    CHECK(mat_diff(ry_pi, Mat2{0.0, -1.0, 1.0, 0.0}) < 1e-15);

    // U(pi/2, pi/2, pi/2) against the factor-product oracle and against the
    // value computed by hand before the build: [[-i/sqrt2, -1/sqrt2],
    // [1/sqrt2, i/sqrt2]].
    const Su2Angles a{kPi / 2.0, kPi / 2.0, kPi / 2.0};
    CHECK(mat_diff(su2_matrix(a), zyz_by_factors(a)) < 1e-14);
    const double r = std::sqrt(0.5);
    const Mat2 frozen{cplx{0.0, -r}, cplx{-r, 0.0}, cplx{r, 0.0}, cplx{0.0, r}};
    CHECK(mat_diff(su2_matrix(a), frozen) < 1e-14);
}

TEST_CASE("su2_matrix is unitary for random angles") {
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const Su2Angles a = oracle::random_angles(rng);
        const Mat2 u = su2_matrix(a);
        const Mat2 uu = u * u.dagger();
        CHECK(mat_diff(uu, Mat2{}) < 1e-12);
        // The ZYZ product has determinant exactly 1; unit modulus at least.
        const cplx det = u.a00 * u.a11 - u.a01 * u.a10;
        CHECK(std::abs(std::abs(det) - 1.0) < 1e-12);
        CHECK(mat_diff(u, zyz_by_factors(a)) < 1e-14);
    }
}

TEST_CASE("apply_single_qubit basics") {
    Statevector s = Statevector::zero(1);
    apply_single_qubit(s, su2_matrix({0.0, kPi, 0.0}), 0);
    CHECK(std::abs(s.amp[0]) < 1e-15);
    CHECK(std::abs(std::abs(s.amp[1]) - 1.0) < 1e-15);

    Statevector s2 = Statevector::zero(2);
    apply_single_qubit(s2, Mat2{}, 1);
    CHECK(std::abs(s2.amp[0] - cplx{1.0, 0.0}) < 1e-15);
}

TEST_CASE("apply_single_qubit matches the dense kron oracle") {
    Rng rng(12);
    for (int t = 0; t < 30; ++t) {
        const int n = 3;
        Statevector s = oracle::random_state(n, rng);
        const std::vector<cplx> before = s.amp;
        const Mat2 u = su2_matrix(oracle::random_angles(rng));
        const int target = static_cast<int>(rng.below(n));

        apply_single_qubit(s, u, target);
        const DenseMatrix full = oracle::dense_single(u, target, n);
        CHECK(oracle::max_amp_diff(s, oracle::matvec(full, before)) < 1e-12);
    }
}

TEST_CASE("apply_controlled zero angles is the identity") {
    Rng rng(13);
    for (int t = 0; t < 20; ++t) {
        Statevector s = oracle::random_state(3, rng);
        const std::vector<cplx> before = s.amp;
        apply_controlled(s, su2_matrix({0.0, 0.0, 0.0}), 2, 0);
        for (std::size_t i = 0; i < before.size(); ++i) {
            CHECK(std::abs(s.amp[i] - before[i]) < 1e-14);
        }
    }
}

TEST_CASE("apply_controlled flips the target when the control is set") {
    Statevector s = Statevector::zero(2);
    apply_single_qubit(s, x_matrix(), 1);  // |10> (qubit 1 set)
    apply_controlled(s, su2_matrix({0.0, kPi, 0.0}), 1, 0);
    CHECK(std::abs(std::abs(s.amp[3]) - 1.0) < 1e-14);  // |11> up to phase
}

TEST_CASE("apply_controlled matches the dense block oracle") {
    Rng rng(14);
    for (int t = 0; t < 30; ++t) {
        const int n = t % 2 == 0 ? 2 : 3;
        Statevector s = oracle::random_state(n, rng);
        const std::vector<cplx> before = s.amp;
        const Mat2 u = su2_matrix(oracle::random_angles(rng));
        const int control = static_cast<int>(rng.below(n));
        int target = static_cast<int>(rng.below(n));
        while (target == control) target = static_cast<int>(rng.below(n));

        apply_controlled(s, u, control, target);
        const DenseMatrix full = oracle::dense_controlled(u, control, target, n);
        CHECK(oracle::max_amp_diff(s, oracle::matvec(full, before)) < 1e-12);
    }
}

TEST_CASE("apply_cnot basics and cross-check") {
    Statevector s = Statevector::zero(2);
    apply_cnot(s, 0, 1);
    CHECK(std::abs(s.amp[0] - cplx{1.0, 0.0}) < 1e-15);  // |00> untouched

    Statevector t = Statevector::zero(2);
    apply_single_qubit(t, x_matrix(), 0);  // control (qubit 0) set
    apply_cnot(t, 0, 1);
    CHECK(std::abs(std::abs(t.amp[3]) - 1.0) < 1e-15);  // target flipped

    Rng rng(15);
    for (int k = 0; k < 20; ++k) {
        Statevector a = oracle::random_state(3, rng);
        Statevector b = a;
        const int control = static_cast<int>(rng.below(3));
        int target = static_cast<int>(rng.below(3));
        while (target == control) target = static_cast<int>(rng.below(3));
        apply_cnot(a, control, target);
        apply_controlled(b, x_matrix(), control, target);
        for (std::size_t i = 0; i < a.amp.size(); ++i) {
            CHECK(std::abs(a.amp[i] - b.amp[i]) < 1e-14);
        }
    }
}

TEST_CASE("prob_first_qubit_zero") {
    CHECK(prob_first_qubit_zero(Statevector::zero(3)) == doctest::Approx(1.0).epsilon(1e-14));

    // (|0> + |1>)/sqrt(2) on qubit 0, |0> on qubit 1.
    Statevector plus = Statevector::zero(2);
    const double r = std::sqrt(0.5);
    apply_single_qubit(plus, Mat2{r, -r, r, r}, 0);
    CHECK(prob_first_qubit_zero(plus) == doctest::Approx(0.5).epsilon(1e-14));

    // Random state vs the dense projector trace.
    Rng rng(16);
    for (int t = 0; t < 20; ++t) {
        const Statevector s = oracle::random_state(3, rng);
        double expected = 0.0;
        for (std::size_t i = 0; i < s.dim(); i += 2) expected += std::norm(s.amp[i]);
        CHECK(std::abs(prob_first_qubit_zero(s) - expected) < 1e-12);
    }
}

TEST_CASE("fidelity") {
    Rng rng(17);
    const Statevector a = oracle::random_state(3, rng);
    CHECK(fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    Statevector zero = Statevector::zero(1);
    Statevector one = Statevector::zero(1);
    apply_single_qubit(one, x_matrix(), 0);
    CHECK(fidelity(zero, one) == doctest::Approx(0.0).epsilon(1e-14));

    for (int t = 0; t < 20; ++t) {
        const Statevector x = oracle::random_state(3, rng);
        const Statevector y = oracle::random_state(3, rng);
        cplx inner{0.0, 0.0};
        for (std::size_t i = 0; i < x.dim(); ++i) inner += std::conj(x.amp[i]) * y.amp[i];
        CHECK(std::abs(fidelity(x, y) - std::norm(inner)) < 1e-12);
        CHECK(std::abs(fidelity(x, y) - fidelity(y, x)) < 1e-14);

        // Global phase on either argument changes nothing.
        Statevector y_phase = y;
        const cplx phase = std::polar(1.0, rng.uniform(-kPi, kPi));
        for (cplx& amp : y_phase.amp) amp *= phase;
        CHECK(std::abs(fidelity(x, y_phase) - fidelity(x, y)) < 1e-12);
    }
}

TEST_CASE("norm preservation over long gate sequences") {
    Rng rng(18);
    Statevector s = Statevector::zero(3);
    for (int g = 0; g < 200; ++g) {
        const Mat2 u = su2_matrix(oracle::random_angles(rng));
        const int a = static_cast<int>(rng.below(3));
        int b = static_cast<int>(rng.below(3));
        while (b == a) b = static_cast<int>(rng.below(3));
        switch (rng.below(3)) {
            case 0: apply_single_qubit(s, u, a); break;
            case 1: apply_controlled(s, u, a, b); break;
            default: apply_cnot(s, a, b); break;
        }
        CHECK(std::abs(s.norm_sq() - 1.0) < 1e-10);
    }
}

TEST_CASE("gate composition equals the dense product B*A") {
    Rng rng(19);
    for (int t = 0; t < 10; ++t) {
        const int n = 3;
        Statevector s = oracle::random_state(n, rng);
        const std::vector<cplx> before = s.amp;
        const Mat2 ua = su2_matrix(oracle::random_angles(rng));
        const Mat2 ub = su2_matrix(oracle::random_angles(rng));
        const int qa = static_cast<int>(rng.below(n));
        const int qb = static_cast<int>(rng.below(n));

        apply_single_qubit(s, ua, qa);
        apply_single_qubit(s, ub, qb);

        const DenseMatrix prod =
            oracle::matmul(oracle::dense_single(ub, qb, n), oracle::dense_single(ua, qa, n));
        CHECK(oracle::max_amp_diff(s, oracle::matvec(prod, before)) < 1e-12);
    }
}

TEST_CASE("error paths") {
    Statevector s = Statevector::zero(2);
    CHECK_THROWS_AS(apply_single_qubit(s, Mat2{}, 2), std::invalid_argument);
    CHECK_THROWS_AS(apply_single_qubit(s, Mat2{}, -1), std::invalid_argument);
    CHECK_THROWS_AS(apply_controlled(s, Mat2{}, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(apply_cnot(s, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(fidelity(Statevector::zero(2), Statevector::zero(3)),
                    std::invalid_argument);
    CHECK_THROWS_AS(Statevector::zero(0), config_error);
    CHECK_THROWS_AS(Statevector::zero(kMaxQubits + 1), config_error);
}
