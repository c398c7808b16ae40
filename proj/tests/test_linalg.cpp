#include "kelsim/linalg.hpp"

#include "kelsim/tolerances.hpp"
#include "test_support.hpp"

#include "doctest.h"

#include <cmath>

using namespace kelsim;

TEST_CASE("commutator and anticommutator on Pauli algebra") {
    const ComplexMatrix sx = pauli_x(), sy = pauli_y(), sz = pauli_z();
    CHECK(max_abs(commutator(sx, sy) - Complex(0, 2) * sz) < 1e-14);
    CHECK(max_abs(anticommutator(sx, sx) - 2.0 * ComplexMatrix::Identity(2, 2)) < 1e-14);

    RngStream rng(11, 0);
    const ComplexMatrix a = test::random_complex(rng, 4, 4);
    CHECK(max_abs(commutator(a, a)) < 1e-13);

    const ComplexMatrix b = test::random_complex(rng, 3, 3);
    CHECK_THROWS_AS((void)commutator(a, b), std::invalid_argument);
    CHECK_THROWS_AS((void)anticommutator(a, b), std::invalid_argument);
}

TEST_CASE("matrix exponential special values") {
    CHECK(max_abs(matrix_exponential(ComplexMatrix::Zero(3, 3)) -
                  ComplexMatrix::Identity(3, 3)) < 1e-15);

    // exp(iπσx/2) = iσx.
    const ComplexMatrix euler =
        matrix_exponential(Complex(0, M_PI / 2) * pauli_x());
    CHECK(max_abs(euler - Complex(0, 1) * pauli_x()) < 1e-13);

    ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
    diag(0, 0) = 1.0;
    diag(1, 1) = 2.0;
    const ComplexMatrix e = matrix_exponential(diag);
    CHECK(std::abs(e(0, 0) - std::exp(1.0)) < 1e-13);
    CHECK(std::abs(e(1, 1) - std::exp(2.0)) < 1e-12);
    CHECK(std::abs(e(0, 1)) == 0.0);
}

TEST_CASE("matrix exponential round trip and unitarity") {
    RngStream rng(12, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 5);
        ComplexMatrix a = test::random_complex(rng, n, n);
        a *= 10.0 / std::max(1.0, max_abs(a) * n);  // ‖a‖ up to ~10
        const ComplexMatrix forward = matrix_exponential(a);
        const ComplexMatrix backward = matrix_exponential(ComplexMatrix(-a));
        CHECK(max_abs(forward * backward - ComplexMatrix::Identity(n, n)) <
              tol::expm_roundtrip);

        // exp(a)† = exp(a†).
        CHECK(max_abs(forward.adjoint() - matrix_exponential(ComplexMatrix(a.adjoint()))) <
              tol::expm_roundtrip * std::max(1.0, max_abs(forward)));

        const ComplexMatrix anti = Complex(0, 1) * test::random_hermitian(rng, n, 2.0);
        const ComplexMatrix u = matrix_exponential(anti);
        CHECK(max_abs(u * u.adjoint() - ComplexMatrix::Identity(n, n)) < tol::unitary_check);
    }
}

TEST_CASE("partial trace reduces product states and Bell state") {
    RngStream rng(13, 0);
    const ComplexMatrix rho_s = test::random_density(rng, 2);
    const ComplexMatrix rho_e = test::random_density(rng, 3);
    const ComplexMatrix joint = kron(rho_s, rho_e);

    CHECK(max_abs(partial_trace(joint, {2, 3}, 0) - rho_s) < 1e-13);
    CHECK(max_abs(partial_trace(joint, {2, 3}, 1) - rho_e) < 1e-13);
    CHECK(std::abs(partial_trace(joint, {2, 3}, 0).trace() - joint.trace()) < 1e-13);

    // Bell state marginal is maximally mixed.
    ComplexVector bell = ComplexVector::Zero(4);
    bell(0) = 1.0 / std::sqrt(2.0);
    bell(3) = 1.0 / std::sqrt(2.0);
    const ComplexMatrix bell_rho = bell * bell.adjoint();
    CHECK(max_abs(partial_trace(bell_rho, {2, 2}, 0) -
                  0.5 * ComplexMatrix::Identity(2, 2)) < 1e-14);

    CHECK_THROWS_AS((void)partial_trace(joint, {2, 2}, 0), std::invalid_argument);
}

TEST_CASE("partial trace is invariant under local unitaries on the traced factor") {
    RngStream rng(14, 0);
    const ComplexMatrix rho = test::random_density(rng, 6);
    const ComplexMatrix u_s = test::random_unitary(rng, 2);
    const ComplexMatrix big_u = kron(u_s, ComplexMatrix::Identity(3, 3));
    const ComplexMatrix rotated = big_u * rho * big_u.adjoint();
    CHECK(max_abs(partial_trace(rotated, {2, 3}, 1) - partial_trace(rho, {2, 3}, 1)) < 1e-12);
}

TEST_CASE("trace distance on known pairs") {
    RngStream rng(15, 0);
    const ComplexMatrix rho = test::random_density(rng, 3);
    CHECK(trace_distance(rho, rho) == 0.0);

    ComplexMatrix p0 = ComplexMatrix::Zero(2, 2), p1 = ComplexMatrix::Zero(2, 2);
    p0(0, 0) = 1.0;
    p1(1, 1) = 1.0;
    CHECK(std::abs(trace_distance(p0, p1) - 1.0) < 1e-14);
    CHECK(std::abs(trace_distance(p0, 0.5 * ComplexMatrix::Identity(2, 2)) - 0.5) < 1e-14);

    // Non-Hermitian difference must be rejected.
    ComplexMatrix skew = p0;
    skew(0, 1) = Complex(0.0, 0.5);
    CHECK_THROWS_AS((void)trace_distance(skew, p1), std::invalid_argument);
}

TEST_CASE("density operator invariants") {
    RngStream rng(16, 0);
    DensityOperator ok(test::random_density(rng, 4));
    CHECK_NOTHROW(ok.validate());

    DensityOperator bad_trace(2.0 * test::random_density(rng, 3));
    CHECK_THROWS_AS(bad_trace.validate(), std::invalid_argument);

    ComplexMatrix negative = ComplexMatrix::Zero(2, 2);
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityOperator(negative).validate(), std::invalid_argument);
}
