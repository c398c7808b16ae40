// tolerances.hpp — the single table of numerical tolerances and guards.
// Every validation threshold used by the library and the acceptance suite
// lives here so that tests and production code cannot drift apart.

#pragma once

namespace kelsim::tol {

// Structural checks on matrices and states.
inline constexpr double hermitian_rel = 1e-12;        // ‖M − M†‖_max / ‖M‖_max for Hermitian-tagged inputs
inline constexpr double density_trace = 1e-10;        // |Tr ρ − 1|
inline constexpr double density_hermitian = 1e-10;    // ‖ρ − ρ†‖_max
inline constexpr double density_min_eig = -1e-8;      // smallest eigenvalue of a density operator

// Dense linear algebra.
inline constexpr double expm_roundtrip = 1e-10;       // ‖exp(A)exp(−A) − I‖_max for ‖A‖ ≤ 10
inline constexpr double unitary_check = 1e-10;        // ‖U U† − I‖_max for exp of anti-Hermitian input
inline constexpr double trace_distance_hermitian = 1e-8;  // Hermiticity slack of (a − b) in trace_distance

// Bath correlation functions and the contour covariance.
inline constexpr double channel_hermiticity = 1e-12;  // c_βα(τ₂,τ₁) vs conj(c_αβ(τ₁,τ₂))
inline constexpr double contour_reimpl = 1e-12;       // covariance blocks vs independent reimplementation
inline constexpr double nu_gram_min_eig = -1e-10;     // PSD slack of the Re-c Gram matrix
inline constexpr double oracle_corr = 1e-6;           // analytic correlation vs truncated-Fock oracle

// Noise sampling.
inline constexpr double takagi_symmetry = 1e-12;      // ‖Σ − Σᵀ‖_max accepted by takagi_factor
inline constexpr double takagi_reconstruct = 1e-8;    // absolute floor for ‖BBᵀ − Σ‖_max
inline constexpr double default_eigen_clip = 1e-10;   // relative clip for factor retention
inline constexpr double rowspace_residual = 1e-8;     // relative ‖(I − P)K‖_max triggering degeneracy error

// Trajectory integration.
inline constexpr double rotation_identity = 1e-8;     // two-state vs SVNE with rotated noises, per trajectory
inline constexpr double scalar_ode = 1e-8;            // scalar closed form vs integrator
inline constexpr double reconstruction_identity = 1e-8;  // |ψ₋⟩⟨ψ₊| vs direct R propagation
inline constexpr double blowup_guard = 1e6;           // ‖R‖_max per-trajectory guard
inline constexpr double max_flagged_fraction = 0.01;  // flagged-trajectory budget before a run is unreliable

// Deterministic propagator.
inline constexpr double ferialdi_hermiticity = 1e-6;  // Hermiticity of the splitting output
inline constexpr double dephasing_quadrature = 1e-8;  // quadrature target of the closed-form exponent
inline constexpr double dephasing_ferialdi = 1e-4;    // evolve_ferialdi vs closed form at dt = t_max/400
inline constexpr double spinboson_ferialdi = 5e-3;    // evolve_ferialdi vs oracle at dt = t_max/800

// Oracle.
inline constexpr double fock_tail = 1e-8;             // default thermal tail mass allowed beyond a cutoff
inline constexpr double oracle_psd = -1e-10;          // PSD slack of oracle-evolved states
inline constexpr double factorization_td = 1e-10;     // V → 0 factorization of the correlated preparation
inline constexpr double cutoff_convergence = 1e-6;    // trace-distance change when doubling cutoffs
inline constexpr int oracle_dim_cap = 4096;           // hard joint-dimension cap

// Wick combinatorics.
inline constexpr double wick_identity = 1e-10;        // substitution identity residual on small grids
inline constexpr double wick_exhaustive = 1e-12;      // m ≤ 1 exhaustive small-grid agreement

// Measurement.
inline constexpr double uncertainty_slack = 1e-10;    // var_x·var_p − cov² ≥ 1/4 − slack
inline constexpr double measurement_oracle = 1e-4;    // Gaussian update vs truncated-Fock M_y application
inline constexpr double mixture_td = 1e-6;            // Σ_y P(y) Ω_y vs Ω on the quadrature grid

// Ensemble statistics (multiples of standard error).
inline constexpr double noise_z = 5.0;                // empirical noise moments vs targets
inline constexpr double mean_z = 3.0;                 // ensemble means vs references
inline constexpr double semiclassical_rel = 0.05;     // mean-field autocorrelation relative deviation
inline constexpr double restoration_td = 0.02;        // outcome-averaged state vs unconditional state
inline constexpr double ensemble_oracle_td = 0.02;    // SVNE ensemble mean vs oracle trace distance

}  // namespace kelsim::tol
