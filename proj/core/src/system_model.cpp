#include "kelsim/system_model.hpp"

#include "kelsim/contour.hpp"
#include "kelsim/tolerances.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace kelsim {

void SystemSpec::validate() const {
    if (h_s.rows() != h_s.cols() || h_s.rows() == 0) {
        throw std::invalid_argument("SystemSpec: h_s must be square and nonempty");
    }
    if (!is_hermitian(h_s, tol::hermitian_rel)) {
        throw std::invalid_argument("SystemSpec: h_s is not Hermitian");
    }
    for (std::size_t a = 0; a < couplings.size(); ++a) {
        const auto& op = couplings[a];
        if (op.rows() != h_s.rows() || op.cols() != h_s.cols()) {
            throw std::invalid_argument("SystemSpec: coupling dim mismatch");
        }
        if (!is_hermitian(op, tol::hermitian_rel)) {
            throw std::invalid_argument("SystemSpec: coupling operator not Hermitian");
        }
    }
    if (!labels.empty() && labels.size() != couplings.size()) {
        throw std::invalid_argument("SystemSpec: label count must match couplings");
    }
}

void PreparationSpec::validate() const {
    if (h_s_prime.rows() != h_s_prime.cols()) {
        throw std::invalid_argument("PreparationSpec: h_s_prime must be square");
    }
    if (!is_hermitian(h_s_prime, tol::hermitian_rel)) {
        throw std::invalid_argument("PreparationSpec: h_s_prime is not Hermitian");
    }
    if (!(b > 0.0)) {
        throw std::invalid_argument("PreparationSpec: b must be positive");
    }
}

namespace {

// Conjugation by exp(iH_S τ) through the cached eigendecomposition of H_S.
struct Conjugator {
    Eigen::VectorXd energies;
    ComplexMatrix u;

    explicit Conjugator(const ComplexMatrix& h_s) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h_s);
        if (es.info() != Eigen::Success) {
            throw std::runtime_error("interaction picture: eigendecomposition failed");
        }
        energies = es.eigenvalues();
        u = es.eigenvectors();
    }

    ComplexMatrix apply(const ComplexMatrix& op, double tau) const {
        const Eigen::Index n = energies.size();
        ComplexVector phase(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            phase(i) = std::exp(Complex(0.0, energies(i) * tau));
        }
        //  e^{iHτ} A e^{-iHτ} = U diag(e^{iλτ}) U† A U diag(e^{-iλτ}) U†
        const ComplexMatrix in_eigen = u.adjoint() * op * u;
        ComplexMatrix rotated(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                rotated(i, j) = phase(i) * in_eigen(i, j) * std::conj(phase(j));
            }
        }
        return u * rotated * u.adjoint();
    }
};

}  // namespace

ComplexMatrix interaction_picture_op(const SystemSpec& spec, int channel, double tau) {
    if (channel < 0 || channel >= spec.n_channels()) {
        throw std::out_of_range("interaction_picture_op: invalid channel");
    }
    if (!std::isfinite(tau)) {
        throw std::invalid_argument("interaction_picture_op: tau must be finite");
    }
    Conjugator conj(spec.h_s);
    return conj.apply(spec.couplings[channel], tau);
}

InteractionPictureCache::InteractionPictureCache(const SystemSpec& spec,
                                                 const TimeGrid& grid) {
    spec.validate();
    grid.validate();
    n_channels_ = spec.n_channels();
    n_nodes_ = grid.n_nodes();
    // Slots per channel: node 0, mid 0, node 1, mid 1, ..., node n (no final mid).
    n_slots_ = static_cast<std::size_t>(2 * n_nodes_ - 1);
    ops_.resize(static_cast<std::size_t>(n_channels_) * n_slots_);

    Conjugator conj(spec.h_s);
    const double dt = grid.dt();
    for (int a = 0; a < n_channels_; ++a) {
        for (int j = 0; j < n_nodes_; ++j) {
            ops_[static_cast<std::size_t>(a) * n_slots_ + 2 * j] =
                conj.apply(spec.couplings[a], j * dt);
            if (j + 1 < n_nodes_) {
                ops_[static_cast<std::size_t>(a) * n_slots_ + 2 * j + 1] =
                    conj.apply(spec.couplings[a], (j + 0.5) * dt);
            }
        }
    }
}

}  // namespace kelsim
