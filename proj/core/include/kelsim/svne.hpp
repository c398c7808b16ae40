// svne.hpp — per-trajectory integration of the two-state equation, the
// stochastic von Neumann equation (plain and shifted), and the two-state
// vector unraveling, plus deterministic ensemble averaging.

#pragma once

#include "kelsim/bath_model.hpp"
#include "kelsim/contour.hpp"
#include "kelsim/linalg.hpp"
#include "kelsim/noise_sampler.hpp"
#include "kelsim/system_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kelsim {

// Non-Hermitian trajectory operator R(t) at a grid node.
struct StochasticState {
    ComplexMatrix r;
    int node = 0;
};

// The pair |ψ₋⟩, |ψ₊⟩ whose outer product reconstructs R for pure initial states.
struct TwoStateVec {
    ComplexVector psi_minus;
    ComplexVector psi_plus;
};

// Mean field E_α evaluated at grid nodes and half-step midpoints:
// slot 2j = node j, slot 2j+1 = midpoint of step j.
struct MeanFieldTable {
    RealMatrix values;  // channels × (2·n_nodes − 1)

    static MeanFieldTable from_bath(const BathSpec& bath, const TimeGrid& grid);
    bool empty() const { return values.size() == 0; }
};

enum class UnravelingKind { two_state, svne, svne_shifted };

// One RK4 step of each unraveling, with noise coefficients linearly
// interpolated between grid nodes. Noise vectors use the channel-major flat
// layout (channel·n_nodes + node). Step functions return false when the
// blow-up guard trips; the state is then invalid and the trajectory must be
// discarded.
class TrajectoryStepper {
public:
    TrajectoryStepper(const InteractionPictureCache& cache, const TimeGrid& grid,
                      double blowup_guard);

    // dR/dt = −iΣ_α (ν_α[A_α,R] + η_α{A_α,R}); with a mean-field table the
    // commutator coefficient becomes ν_α + E_α (shifted SVNE).
    bool step_svne(ComplexMatrix& r, const ComplexVector& nu, const ComplexVector& eta,
                   int step, const MeanFieldTable* mean_field = nullptr) const;

    // dR/dt = −iΣ_α ξ⁻_α A_α R + iΣ_α ξ⁺_α R A_α.
    bool step_twostate(ComplexMatrix& r, const ComplexVector& xi_minus,
                       const ComplexVector& xi_plus, int step) const;

    // Two-state vector unraveling with R = |ψ₋⟩⟨ψ₊|. The minus ket obeys
    // d|ψ₋⟩/dt = −iΣ ξ⁻_α A_α |ψ₋⟩; psi_plus stores the ket of the bra
    // component, so it propagates with the conjugated noise,
    // d|ψ₊⟩/dt = −iΣ conj(ξ⁺_α) A_α |ψ₊⟩, which makes ⟨ψ₊| carry ξ⁺ and the
    // outer product solve the two-state equation for complex noise as well.
    bool step_two_state_vectors(TwoStateVec& psi, const ComplexVector& xi_minus,
                                const ComplexVector& xi_plus, int step) const;

    int n_channels() const { return cache_->n_channels(); }
    int n_nodes() const { return cache_->n_nodes(); }

private:
    // Σ_α coeff_α A_α at the given stage of step `step` (0 = node, 1 = mid, 2 = next node).
    void weighted_sum(ComplexMatrix& out, const ComplexVector& coeff_at_nodes, int step,
                      int stage, const RealMatrix* shift) const;

    const InteractionPictureCache* cache_;
    double dt_;
    double guard_;
};

struct ObservableSeries {
    std::string name;
    std::vector<Complex> mean;
    std::vector<double> se_re;
    std::vector<double> se_im;
};

struct EnsembleResult {
    std::vector<ComplexMatrix> mean_rho;  // per node
    std::vector<RealMatrix> std_err;      // per node, per entry: sqrt((Var Re + Var Im)/n)
    std::vector<ObservableSeries> observables;
    std::vector<Complex> trace_mean;      // E[Tr R] per node
    std::vector<double> trace_se;
    std::uint64_t base_seed = 0;
    long n_requested = 0;
    long n_used = 0;
    long n_flagged = 0;
    double max_hermiticity_z = 0.0;  // max defect / SE over nodes and entries

    bool reliable() const;
};

struct EnsembleOptions {
    UnravelingKind kind = UnravelingKind::svne;
    long n_traj = 1000;
    int threads = 1;
    int block_size = 256;  // reduction granularity; results do not depend on threads
    double blowup_guard = 1e6;
};

// Runs n_traj trajectories and averages them with a fixed block-reduction
// topology, so the result is bit-identical for any thread count. Trajectory
// i uses the RNG stream (sampler.base_seed, i).
EnsembleResult run_ensemble(const InteractionPictureCache& cache, const NoiseSampler& sampler,
                            const TimeGrid& grid, const ComplexMatrix& rho0,
                            const EnsembleOptions& options,
                            const std::vector<ComplexMatrix>& observables = {},
                            const MeanFieldTable* mean_field = nullptr);

}  // namespace kelsim
