// measurement.hpp — one-shot heterodyne measurement of the environment,
// exact Gaussian conditioning with back-action, conditional kernels, and the
// semiclassical noise-interpretation experiment.

#pragma once

#include "kelsim/bath_model.hpp"
#include "kelsim/contour.hpp"
#include "kelsim/linalg.hpp"
#include "kelsim/rng.hpp"
#include "kelsim/svne.hpp"
#include "kelsim/system_model.hpp"

#include <cstdint>
#include <vector>

namespace kelsim {

// Gaussian environment state tracked by per-mode means and covariances.
struct GaussianEnvState {
    std::vector<ModeMoments> modes;

    // Uncertainty var_x·var_p − cov² ≥ 1/4 per mode; throws on violation.
    void validate() const;
};

// Per-mode measurement resolutions σ (the measurement operator is a Gaussian
// of width σ around the outcome).
struct MeasurementSpec {
    std::vector<double> sigma_x;
    std::vector<double> sigma_p;

    void validate(std::size_t n_modes) const;
};

struct OutcomeRecord {
    std::vector<double> x_out;
    std::vector<double> p_out;
};

// Moments of the bath's initial state (thermal or displaced).
GaussianEnvState initial_env_state(const BathSpec& bath);

// Conditioning of one mode on a given outcome of a Gaussian-resolution
// reading of X (measure_x) or P: posterior mean (σ²μ + Δ²y)/(Δ² + σ²),
// posterior variance Δ²σ²/(Δ² + σ²), conjugate variance inflated by the
// back-action 1/(4σ²). General covariance handled through the Kalman gain.
void condition_on_outcome(ModeMoments& mode, bool measure_x, double sigma, double outcome);

// Sequential heterodyne update, momentum first then position per mode;
// outcomes are drawn from N(mean, Δ² + σ²). The posterior covariance does
// not depend on the outcomes.
std::pair<OutcomeRecord, GaussianEnvState> gaussian_measure_update(
    const GaussianEnvState& state, const MeasurementSpec& spec, RngStream& rng);

// E^{(y)}_α(t) = Σ_k g_αk [x̄_k cos ω_k t + (p̄_k / m_k ω_k) sin ω_k t].
double conditional_mean_field(const GaussianEnvState& post, const BathSpec& bath, int alpha,
                              double t);

// c^{(y)}: same functional form as phys_corr with the thermal occupations
// replaced by the post-measured variances; the imaginary part is untouched.
Complex conditional_corr(const GaussianEnvState& post, const BathSpec& bath, int alpha,
                         int beta_ch, double tau1, double tau2);

// The bath with its state replaced by the given Gaussian moments, so the
// whole sampling/integration stack runs on post-measured kernels.
BathSpec conditioned_bath(const BathSpec& bath, const GaussianEnvState& post);

struct SemiclassicalConfig {
    MeasurementSpec spec;
    TimeGrid grid;
    int n_outcomes = 100;
    long n_traj_per_outcome = 100;
    std::uint64_t base_seed = 0;
    int threads = 1;
    double eigen_clip = 1e-10;
};

struct SemiclassicalReport {
    // Condition ratios per mode.
    std::vector<double> ratio_x;       // σ_X/Δ_X
    std::vector<double> ratio_p;       // σ_P/Δ_P
    std::vector<double> sigma_product; // σ_X σ_P
    bool in_regime = false;

    // Outcome-averaged mean-field autocorrelation vs Re c (channel-major layout).
    RealMatrix target_re_c;
    RealMatrix empirical_autocorr;
    RealMatrix autocorr_se;
    double max_autocorr_rel_dev = 0.0;  // max |emp − Re c| over the Re c scale
    double max_autocorr_z = 0.0;

    // Outcome-average of conditioned evolutions vs the reference series.
    std::vector<ComplexMatrix> restored_mean;
    std::vector<double> restoration_td;
    double max_restoration_td = 0.0;

    // Share of ν^{(y)} fluctuations relative to the mean-field fluctuations
    // at τ = 0 (the footnote diagnostic: small in the semiclassical regime).
    double nu_y_share = 0.0;

    long n_outcomes = 0;
    long n_traj_per_outcome = 0;
    long flagged = 0;
};

// Runs the full §-measurement experiment: samples outcome records, checks
// the mean-field autocorrelation against Re c, runs the conditioned shifted
// SVNE per outcome, and compares the outcome average with `reference`
// (pass the unconditional oracle series; empty disables the comparison).
SemiclassicalReport semiclassical_experiment(const SystemSpec& system, const BathSpec& bath,
                                             const SemiclassicalConfig& config,
                                             const ComplexMatrix& rho0,
                                             const std::vector<ComplexMatrix>& reference = {});

}  // namespace kelsim
