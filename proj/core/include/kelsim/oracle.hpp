// oracle.hpp — brute-force ground truth: exact evolution of the system plus
// truncated bosonic modes, for thermal, displaced, and canonically
// correlated initial states.

#pragma once

#include "kelsim/bath_model.hpp"
#include "kelsim/contour.hpp"
#include "kelsim/linalg.hpp"
#include "kelsim/system_model.hpp"

#include <vector>

namespace kelsim {

struct FockConfig {
    std::vector<int> cutoffs;  // Fock dimension per mode, each ≥ 2
    double tail_tol = 1e-8;

    void validate() const;
    long env_dim() const;
};

// Joint system ⊗ environment state at the truncated dimension.
struct JointState {
    ComplexMatrix matrix;
};

// Ladder and quadrature operators on a truncated Fock space.
ComplexMatrix fock_annihilation(int cutoff);
ComplexMatrix fock_number(int cutoff);
// X = (a + a†)/√(2mω), P = i√(mω/2)(a† − a).
ComplexMatrix fock_position(int cutoff, double mass, double omega);
ComplexMatrix fock_momentum(int cutoff, double mass, double omega);
// exp(α a† − α* a) built at cutoff + pad and truncated back.
ComplexMatrix fock_displacement(int cutoff, Complex alpha, int pad = 8);

// Mode-k operator extended to the full environment by identities.
ComplexMatrix env_extend(const FockConfig& fock, int mode, const ComplexMatrix& op);

// B_α = Σ_k g_αk X_k on the environment space.
ComplexMatrix env_coupling_operator(const BathSpec& bath, const FockConfig& fock, int alpha);

// H_E = Σ_k ω_k a†_k a_k.
ComplexMatrix env_hamiltonian(const BathSpec& bath, const FockConfig& fock);

// H = H_S ⊗ 1 + 1 ⊗ H_E + Σ_α A_α ⊗ B_α. Throws past the dimension cap.
ComplexMatrix build_joint_hamiltonian(const SystemSpec& system, const BathSpec& bath,
                                      const FockConfig& fock);

// Truncated thermal or displaced-thermal environment state, renormalized.
// Throws when the tail mass beyond a cutoff is ≥ fock.tail_tol.
ComplexMatrix env_initial_state(const BathSpec& bath, const FockConfig& fock);

// exp(−2b(H'₀ + V))/Z with H'₀ = H'_S ⊗ 1 + 1 ⊗ H_E.
JointState correlated_initial_state(const SystemSpec& system, const BathSpec& bath,
                                    const PreparationSpec& prep, const FockConfig& fock);

// Interaction-picture reduced dynamics
//   ϱ(t) = e^{iH_S t} Tr_E[e^{−iHt} ρ_SE(0) e^{iHt}] e^{−iH_S t}
// at the grid nodes, through one eigendecomposition of H.
std::vector<ComplexMatrix> evolve_exact(const JointState& joint0, const SystemSpec& system,
                                        const BathSpec& bath, const FockConfig& fock,
                                        const TimeGrid& grid);

// Environment two-point function Tr[B_α(τ₁)B_β(τ₂)Ω] by Heisenberg
// evolution on the truncated space; the independent check of phys_corr.
Complex oracle_two_point(const BathSpec& bath, const FockConfig& fock, int alpha,
                         int beta_ch, double tau1, double tau2);

// Tr[B_α(τ) Ω] on the truncated space.
Complex oracle_mean(const BathSpec& bath, const FockConfig& fock, int alpha, double tau);

}  // namespace kelsim
