// bath_model.hpp — discrete-mode Gaussian bosonic environment: thermal,
// displaced, and general Gaussian states, physical-time and contour Green's
// functions, and the Keldysh-rotated kernels.

#pragma once

#include "kelsim/contour.hpp"
#include "kelsim/linalg.hpp"

#include <vector>

namespace kelsim {

// A single harmonic mode.
struct BathMode {
    double omega = 1.0;
    double mass = 1.0;
};

// First and second moments of one mode's (X, P) quadratures.
struct ModeMoments {
    double mean_x = 0.0;
    double mean_p = 0.0;
    double var_x = 0.5;
    double var_p = 0.5;
    double cov_xp = 0.0;
};

enum class BathStateKind {
    thermal,    // exp(-βH_E)/Z, β may be +infinity (vacuum); zero means
    displaced,  // thermal displaced to per-mode means (violates stability)
    gaussian,   // arbitrary per-mode Gaussian moments (e.g. post-measurement)
};

struct BathState {
    BathStateKind kind = BathStateKind::thermal;
    double beta = 1.0;                 // thermal / displaced
    std::vector<double> mean_x;        // displaced
    std::vector<double> mean_p;        // displaced
    std::vector<ModeMoments> moments;  // gaussian

    static BathState thermal_state(double beta);
    static BathState displaced_state(double beta, std::vector<double> mean_x,
                                     std::vector<double> mean_p);
    static BathState gaussian_state(std::vector<ModeMoments> moments);
};

// Channel α couples through B_α = Σ_k g[α][k] · X_k with X_k the position
// operator of mode k (this fixes the normalization of the coupling matrix).
struct BathSpec {
    std::vector<BathMode> modes;
    std::vector<std::vector<double>> coupling;  // [channel][mode]
    BathState state;

    int n_modes() const { return static_cast<int>(modes.size()); }
    int n_channels() const { return static_cast<int>(coupling.size()); }

    void validate() const;
};

// coth(βω/2) with the β = ∞ (vacuum) limit coth → 1.
double thermal_coth(double beta, double omega);

// Quadrature moments of mode k in the bath's state, whatever its kind.
ModeMoments mode_moments(const BathSpec& bath, int k);

// Centered physical-time correlation c_αβ(τ₁,τ₂) = Tr[B̃_α(τ₁)B̃_β(τ₂)Ω].
// For a thermal state this reduces to
//   Σ_k g_αk g_βk (1/2m_kω_k)[coth(βω_k/2) cos ω_k(τ₁−τ₂) − i sin ω_k(τ₁−τ₂)];
// the imaginary part is state-independent and shares one code path for all
// state kinds. Displacements leave centered moments alone.
Complex phys_corr(const BathSpec& bath, int alpha, int beta_ch, double tau1, double tau2);

// Tr[B_α(τ) Ω]: zero for thermal states, the rotating mean otherwise.
Complex mean_field(const BathSpec& bath, int alpha, double tau);

// Contour Green's function by branch-pair dispatch (time-ordered,
// anti-time-ordered, greater, lesser) with θ(0) = 1/2 at coincident nodes.
Complex contour_gf(const BathSpec& bath, int alpha, int beta_ch, const TimeGrid& grid,
                   ContourPoint z1, ContourPoint z2);

struct KeldyshKernels {
    double nu_nu;     // Re c_αβ(τ₁,τ₂)
    double retarded;  // θ(τ₁−τ₂) Im c_αβ(τ₁,τ₂), θ(0) = 1/2
};

KeldyshKernels keldysh_kernels(const BathSpec& bath, int alpha, int beta_ch,
                               double tau1, double tau2);

// Gram matrix of Re c over channels × nodes (rotated-noise covariance).
// Layout: channel-major, i.e. flat = channel*n_nodes + node.
RealMatrix nu_covariance(const BathSpec& bath, const TimeGrid& grid);

// Retarded kernel matrix K[(α,j),(β,k)] = θ(τ_j−τ_k) Im c_αβ(τ_j,τ_k),
// same layout as nu_covariance. E[ν η] = i K.
RealMatrix retarded_kernel(const BathSpec& bath, const TimeGrid& grid);

}  // namespace kelsim
