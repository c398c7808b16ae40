// noise_sampler.hpp — draws contour-noise trajectories with the exact
// covariance structure of the bath, either by Takagi-factorizing the full
// contour covariance or by the rotated-variable construction.

#pragma once

#include "kelsim/bath_model.hpp"
#include "kelsim/contour.hpp"
#include "kelsim/linalg.hpp"
#include "kelsim/rng.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace kelsim {

// One sampled trajectory of the Keldysh-rotated noises on the grid.
// Layout of nu/eta: channel-major, flat = channel*n_nodes + node.
struct NoiseTrajectory {
    ComplexVector nu;
    ComplexVector eta;
    std::uint64_t trajectory_index = 0;
};

enum class SamplerMethod { contour_takagi, rotated_factorization };

struct SamplerConfig {
    SamplerMethod method = SamplerMethod::contour_takagi;
    double eigen_clip = 1e-10;  // relative clip on retained factor weights
    std::uint64_t base_seed = 0;
};

// Result of a Takagi factorization Σ = BBᵀ of a complex symmetric matrix.
struct TakagiFactor {
    ComplexMatrix b;            // n × r, columns for retained values only
    RealVector values;          // retained Takagi values, descending
    double clipped_mass = 0.0;  // Σ of dropped values / Σ of all values
};

// Autonne-Takagi factorization through the eigendecomposition of the real
// symmetric embedding [[Re Σ, Im Σ], [Im Σ, −Re Σ]]; values below
// clip·max(value) are dropped. Throws on asymmetric input.
TakagiFactor takagi_factor(const ComplexMatrix& sigma, double clip);

// Thrown by the rotated construction when the retarded kernel leaves the
// row space of the ν covariance (mode-poor bath on a fine grid); callers
// fall back to contour_takagi.
struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class NoiseSampler {
public:
    NoiseSampler(const BathSpec& bath, const TimeGrid& grid, const SamplerConfig& config);

    // Deterministic function of (base_seed, trajectory_index).
    NoiseTrajectory sample(std::uint64_t trajectory_index) const;

    // Raw contour-noise vector in the ContourLayout ordering
    // (contour_takagi method only; used by diagnostics and tests).
    ComplexVector sample_contour(std::uint64_t trajectory_index) const;

    // Copy with a different base seed; reuses the cached factorization.
    NoiseSampler reseeded(std::uint64_t base_seed) const;

    const ContourLayout& layout() const { return layout_; }
    const SamplerConfig& config() const { return config_; }
    double clipped_mass() const { return clipped_mass_; }
    int n_channels() const { return layout_.n_channels; }
    int n_nodes() const { return layout_.n_nodes; }

private:
    ComplexVector draw_xi(RngStream& rng) const;

    SamplerConfig config_;
    ContourLayout layout_;
    double clipped_mass_ = 0.0;

    // contour_takagi state
    ComplexMatrix takagi_b_;

    // rotated_factorization state
    RealMatrix nu_factor_;       // A with AAᵀ = Σνν
    RealMatrix eta_gain_;        // G with AGᵀ = K
};

// Streaming first and second bilinear moments of sampled trajectories with
// per-entry standard errors. Accumulates E[νν], E[νη], E[ηη] (no conjugates,
// matching the unraveling identities).
class EmpiricalMoments {
public:
    explicit EmpiricalMoments(int dim);

    void add(const NoiseTrajectory& traj);

    std::uint64_t count() const { return count_; }
    ComplexMatrix mean_nu_nu() const { return scaled(sum_nn_); }
    ComplexMatrix mean_nu_eta() const { return scaled(sum_ne_); }
    ComplexMatrix mean_eta_eta() const { return scaled(sum_ee_); }
    ComplexVector mean_nu() const;
    ComplexVector mean_eta() const;
    // Standard error of the corresponding mean, per entry, separately for
    // real and imaginary parts combined in quadrature.
    RealMatrix se_nu_nu() const { return se(sum_nn_, sumsq_nn_); }
    RealMatrix se_nu_eta() const { return se(sum_ne_, sumsq_ne_); }
    RealMatrix se_eta_eta() const { return se(sum_ee_, sumsq_ee_); }
    RealVector se_nu() const;
    RealVector se_eta() const;

private:
    ComplexMatrix scaled(const ComplexMatrix& s) const;
    RealMatrix se(const ComplexMatrix& s, const RealMatrix& sq) const;
    RealVector se_vec(const ComplexVector& s, const RealVector& sq) const;

    std::uint64_t count_ = 0;
    ComplexMatrix sum_nn_, sum_ne_, sum_ee_;
    RealMatrix sumsq_nn_, sumsq_ne_, sumsq_ee_;  // Σ(Re² + Im²) of the products
    ComplexVector sum_nu_, sum_eta_;
    RealVector sumsq_nu_, sumsq_eta_;
    ComplexMatrix work_;
};

}  // namespace kelsim
