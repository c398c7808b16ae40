// contour.hpp — time grid, Keldysh-contour bookkeeping, contour covariance
// assembly, and the Keldysh rotation.

#pragma once

#include "kelsim/linalg.hpp"

#include <vector>

namespace kelsim {

struct BathSpec;  // bath_model.hpp

// Uniform grid over [0, t_max] with nodes at both endpoints. n_steps = 0 is
// the degenerate single-node grid at τ = 0.
struct TimeGrid {
    double t_max = 1.0;
    int n_steps = 1;

    double dt() const { return n_steps > 0 ? t_max / n_steps : 0.0; }
    int n_nodes() const { return n_steps + 1; }
    double node(int j) const { return j * dt(); }

    void validate() const;
};

enum class Branch : int { minus = 0, plus = 1 };

// A point on the doubled time domain: grid node `index` on `branch`.
struct ContourPoint {
    Branch branch = Branch::minus;
    int index = 0;
};

// Fixed memory layout of contour-indexed vectors and matrices. This is a
// stable contract: branch-major, then channel, then node, i.e.
//   flat = branch*(n_channels*n_nodes) + channel*n_nodes + node
// with branch 0 = minus, branch 1 = plus.
struct ContourLayout {
    int n_channels = 1;
    int n_nodes = 2;

    int size() const { return 2 * n_channels * n_nodes; }
    int flat(Branch b, int channel, int node) const {
        return static_cast<int>(b) * n_channels * n_nodes + channel * n_nodes + node;
    }
};

// The complex-symmetric covariance of the contour noise,
// Σ[(b₁,α,j),(b₂,β,k)] = C_{α,β}((b₁,j),(b₂,k)).
struct ContourCovariance {
    ContourLayout layout;
    ComplexMatrix matrix;
};

ContourCovariance build_contour_covariance(const BathSpec& bath, const TimeGrid& grid);

// ν = (ξ⁻ + ξ⁺)/2, η = (ξ⁻ − ξ⁺)/2.
void keldysh_rotate(const ComplexVector& xi_minus, const ComplexVector& xi_plus,
                    ComplexVector& nu, ComplexVector& eta);

// ξ∓ = ν ± η; exact inverse of keldysh_rotate.
void keldysh_rotate_inverse(const ComplexVector& nu, const ComplexVector& eta,
                            ComplexVector& xi_minus, ComplexVector& xi_plus);

}  // namespace kelsim
