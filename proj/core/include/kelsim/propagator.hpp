// propagator.hpp — noise-free evaluation of the exact Gaussian reduced
// dynamics: the discretized time-ordered superoperator exponential and the
// commuting-coupling (pure dephasing) closed form.

#pragma once

#include "kelsim/bath_model.hpp"
#include "kelsim/contour.hpp"
#include "kelsim/linalg.hpp"
#include "kelsim/system_model.hpp"

#include <vector>

namespace kelsim {

// Per-step superoperator increment X ↦ P X + X Q + Σ_d c_d L_d X R_d built
// from the two-time kernel with θ weights; cross terms stay as dyads so no
// d²×d² matrix is ever materialized.
struct SuperKernel {
    ComplexMatrix left;   // P
    ComplexMatrix right;  // Q
    std::vector<ComplexMatrix> dyad_left;
    std::vector<ComplexMatrix> dyad_right;
    std::vector<Complex> dyad_coeff;

    ComplexMatrix apply(const ComplexMatrix& x) const;
    double norm_estimate() const;
};

// First-order step splitting of the time-ordered exponential: at step j the
// newly accumulated double-sum increment (all pairs with a node at j or j+1,
// trapezoid weights) is exponentiated and applied. Converges to the exact
// dynamics with first-order global error as dt → 0. Returns the interaction
// picture state at every grid node. Includes the linear mean-field term when
// the bath violates the stability condition.
std::vector<ComplexMatrix> evolve_ferialdi(const SystemSpec& system, const BathSpec& bath,
                                           const ComplexMatrix& rho0, const TimeGrid& grid);

// Closed-form dephasing solution for couplings that commute with H_S and
// with each other. `basis` is the common eigenbasis (columns); H_S and every
// A_α must be diagonal in it. Matrix element (i,j) acquires the factor
// exp[−½ ΣΣ ∬_γ C(z₁,z₂) a(z₁)a(z₂)] with a = a_i on γ₋ and a_j on γ₊,
// evaluated by composite Simpson quadrature on the smooth triangle pieces.
ComplexMatrix analytic_dephasing(const SystemSpec& system, const BathSpec& bath,
                                 const ComplexMatrix& rho0, double t,
                                 const ComplexMatrix& basis);

}  // namespace kelsim
