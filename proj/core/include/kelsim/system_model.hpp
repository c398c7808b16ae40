// system_model.hpp — system Hamiltonian, coupling operators, and their
// interaction-picture images cached on the simulation grid.

#pragma once

#include "kelsim/linalg.hpp"

#include <string>
#include <vector>

namespace kelsim {

struct TimeGrid;  // contour.hpp

// The open system: Hamiltonian plus the Hermitian coupling operators A_α,
// one per bath channel.
struct SystemSpec {
    ComplexMatrix h_s;
    std::vector<ComplexMatrix> couplings;
    std::vector<std::string> labels;

    int dim() const { return static_cast<int>(h_s.rows()); }
    int n_channels() const { return static_cast<int>(couplings.size()); }

    // Hermiticity and shape invariants; throws on violation.
    void validate() const;
};

// Preparation Hamiltonian and inverse-temperature parameter of the
// correlated canonical state exp(-2b(H'_0 + V))/Z.
struct PreparationSpec {
    ComplexMatrix h_s_prime;
    double b = 1.0;

    void validate() const;
};

// e^{iH_S τ} A_α e^{-iH_S τ}, evaluated through the eigendecomposition of H_S.
ComplexMatrix interaction_picture_op(const SystemSpec& spec, int channel, double tau);

// Interaction-picture operators cached at the grid nodes and half-step
// midpoints. Built once before an ensemble launch and shared read-only by
// all trajectories; lookups are O(1).
class InteractionPictureCache {
public:
    InteractionPictureCache(const SystemSpec& spec, const TimeGrid& grid);

    // Cached operator at node j (tau = j*dt).
    const ComplexMatrix& at_node(int channel, int node) const {
        return ops_[static_cast<std::size_t>(channel) * n_slots_ + 2 * node];
    }
    // Cached operator at the midpoint of step j (tau = (j + 1/2)*dt).
    const ComplexMatrix& at_midpoint(int channel, int step) const {
        return ops_[static_cast<std::size_t>(channel) * n_slots_ + 2 * step + 1];
    }

    int n_channels() const { return n_channels_; }
    int n_nodes() const { return n_nodes_; }

private:
    int n_channels_;
    int n_nodes_;
    std::size_t n_slots_;
    std::vector<ComplexMatrix> ops_;
};

}  // namespace kelsim
