// linalg.hpp — dense complex matrix algebra shared by every other module.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

namespace kelsim {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Largest entry magnitude; zero for empty matrices.
double max_abs(const ComplexMatrix& m);

// ‖M − M†‖_max, the absolute Hermiticity defect.
double hermiticity_defect(const ComplexMatrix& m);

bool is_hermitian(const ComplexMatrix& m, double rel_tol);

// All entries finite (no NaN/Inf).
bool all_finite(const ComplexMatrix& m);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b);

// exp(A) by scaling-and-squaring with a diagonal Padé approximant.
// Order 13 with squaring threshold ‖A‖₁ ≤ 5.37 (lower orders 3/5/7/9 are
// used when the norm permits), which keeps the round-trip error below
// tol::expm_roundtrip for ‖A‖ ≤ 10.
ComplexMatrix matrix_exponential(const ComplexMatrix& a);

// Kronecker product, row-major convention: (A ⊗ B)[(i·p+k),(j·q+l)] = A(i,j)B(k,l).
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Trace out every tensor factor except `keep`. `dims` lists the factor
// dimensions in the same order used to build the joint matrix with kron.
ComplexMatrix partial_trace(const ComplexMatrix& joint,
                            const std::vector<int>& dims, int keep);

// ½‖a − b‖₁ through the eigenvalues of the Hermitian difference.
// Throws if a − b fails the Hermiticity check.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

// A density operator with its defining invariants (unit trace, Hermitian,
// positive semidefinite up to tolerance).
struct DensityOperator {
    ComplexMatrix matrix;

    DensityOperator() = default;
    explicit DensityOperator(ComplexMatrix m) : matrix(std::move(m)) {}

    // Throws std::invalid_argument describing the violated invariant.
    void validate() const;
};

// Pauli matrices and friends, used all over the tests and example models.
ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();

}  // namespace kelsim
