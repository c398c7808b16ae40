#include "kelsim/oracle.hpp"

#include "kelsim/tolerances.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace kelsim {

void FockConfig::validate() const {
    if (cutoffs.empty()) throw std::invalid_argument("FockConfig: needs at least one mode");
    for (int c : cutoffs) {
        if (c < 2) throw std::invalid_argument("FockConfig: cutoffs must be >= 2");
    }
    if (!(tail_tol > 0.0)) throw std::invalid_argument("FockConfig: tail_tol must be positive");
}

long FockConfig::env_dim() const {
    long d = 1;
    for (int c : cutoffs) d *= c;
    return d;
}

ComplexMatrix fock_annihilation(int cutoff) {
    ComplexMatrix a = ComplexMatrix::Zero(cutoff, cutoff);
    for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

ComplexMatrix fock_number(int cutoff) {
    ComplexMatrix n = ComplexMatrix::Zero(cutoff, cutoff);
    for (int i = 0; i < cutoff; ++i) n(i, i) = static_cast<double>(i);
    return n;
}

ComplexMatrix fock_position(int cutoff, double mass, double omega) {
    const ComplexMatrix a = fock_annihilation(cutoff);
    return (a + a.adjoint().eval()) / std::sqrt(2.0 * mass * omega);
}

ComplexMatrix fock_momentum(int cutoff, double mass, double omega) {
    const ComplexMatrix a = fock_annihilation(cutoff);
    return Complex(0.0, 1.0) * std::sqrt(0.5 * mass * omega) * (a.adjoint() - a).eval();
}

ComplexMatrix fock_displacement(int cutoff, Complex alpha, int pad) {
    const int big = cutoff + pad;
    const ComplexMatrix a = fock_annihilation(big);
    const ComplexMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
    return matrix_exponential(gen).topLeftCorner(cutoff, cutoff);
}

ComplexMatrix env_extend(const FockConfig& fock, int mode, const ComplexMatrix& op) {
    ComplexMatrix out = ComplexMatrix::Identity(1, 1);
    for (std::size_t k = 0; k < fock.cutoffs.size(); ++k) {
        if (static_cast<int>(k) == mode) {
            out = kron(out, op);
        } else {
            out = kron(out, ComplexMatrix::Identity(fock.cutoffs[k], fock.cutoffs[k]));
        }
    }
    return out;
}

ComplexMatrix env_coupling_operator(const BathSpec& bath, const FockConfig& fock, int alpha) {
    const long d = fock.env_dim();
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    for (int k = 0; k < bath.n_modes(); ++k) {
        const double g = bath.coupling[alpha][k];
        if (g == 0.0) continue;
        out += g * env_extend(fock, k,
                              fock_position(fock.cutoffs[k], bath.modes[k].mass,
                                            bath.modes[k].omega));
    }
    return out;
}

ComplexMatrix env_hamiltonian(const BathSpec& bath, const FockConfig& fock) {
    const long d = fock.env_dim();
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    for (int k = 0; k < bath.n_modes(); ++k) {
        out += bath.modes[k].omega * env_extend(fock, k, fock_number(fock.cutoffs[k]));
    }
    return out;
}

ComplexMatrix build_joint_hamiltonian(const SystemSpec& system, const BathSpec& bath,
                                      const FockConfig& fock) {
    system.validate();
    bath.validate();
    fock.validate();
    if (static_cast<int>(fock.cutoffs.size()) != bath.n_modes()) {
        throw std::invalid_argument("build_joint_hamiltonian: one cutoff per mode required");
    }
    const long d_s = system.h_s.rows();
    const long d_e = fock.env_dim();
    if (d_s * d_e > tol::oracle_dim_cap) {
        throw std::runtime_error("build_joint_hamiltonian: joint dimension " +
                                 std::to_string(d_s * d_e) + " exceeds cap " +
                                 std::to_string(tol::oracle_dim_cap));
    }
    const ComplexMatrix id_s = ComplexMatrix::Identity(d_s, d_s);
    const ComplexMatrix id_e = ComplexMatrix::Identity(d_e, d_e);
    ComplexMatrix h = kron(system.h_s, id_e) + kron(id_s, env_hamiltonian(bath, fock));
    for (int a = 0; a < system.n_channels(); ++a) {
        h += kron(system.couplings[a], env_coupling_operator(bath, fock, a));
    }
    return h;
}

namespace {

// Truncated thermal state of one mode plus its tail mass beyond the cutoff.
std::pair<ComplexMatrix, double> mode_thermal(double beta, double omega, int cutoff) {
    ComplexMatrix rho = ComplexMatrix::Zero(cutoff, cutoff);
    if (std::isinf(beta)) {
        rho(0, 0) = 1.0;
        return {rho, 0.0};
    }
    const double q = std::exp(-beta * omega);
    for (int n = 0; n < cutoff; ++n) rho(n, n) = (1.0 - q) * std::pow(q, n);
    const double tail = std::pow(q, cutoff);  // Σ_{n≥c}(1−q)qⁿ
    rho /= rho.trace().real();                // renormalize the kept block
    return {rho, tail};
}

}  // namespace

ComplexMatrix env_initial_state(const BathSpec& bath, const FockConfig& fock) {
    bath.validate();
    fock.validate();
    if (bath.state.kind == BathStateKind::gaussian) {
        throw std::invalid_argument("env_initial_state: gaussian moments have no unique Fock realization here");
    }
    ComplexMatrix out = ComplexMatrix::Identity(1, 1);
    for (int k = 0; k < bath.n_modes(); ++k) {
        const int cutoff = fock.cutoffs[k];
        auto [rho, tail] = mode_thermal(bath.state.beta, bath.modes[k].omega, cutoff);
        if (bath.state.kind == BathStateKind::displaced) {
            const auto& m = bath.modes[k];
            const Complex alpha(std::sqrt(0.5 * m.mass * m.omega) * bath.state.mean_x[k],
                                bath.state.mean_p[k] / std::sqrt(2.0 * m.mass * m.omega));
            // Displace at a padded cutoff so the displaced tail is visible.
            const int pad = 8 + static_cast<int>(std::ceil(4.0 * std::abs(alpha)));
            auto [rho_big, tail_big] =
                mode_thermal(bath.state.beta, m.omega, cutoff + pad);
            const ComplexMatrix disp = fock_displacement(cutoff + pad, alpha, pad);
            const ComplexMatrix displaced = disp * rho_big * disp.adjoint();
            const double kept = displaced.topLeftCorner(cutoff, cutoff).trace().real();
            tail = std::max(tail_big, 1.0 - kept);
            rho = displaced.topLeftCorner(cutoff, cutoff) / kept;
        }
        if (tail >= fock.tail_tol) {
            throw std::runtime_error(
                "env_initial_state: tail mass " + std::to_string(tail) + " at cutoff " +
                std::to_string(cutoff) + " exceeds tail_tol; suggested cutoff " +
                std::to_string(2 * cutoff));
        }
        out = kron(out, rho);
    }
    return out;
}

JointState correlated_initial_state(const SystemSpec& system, const BathSpec& bath,
                                    const PreparationSpec& prep, const FockConfig& fock) {
    prep.validate();
    const long d_s = system.h_s.rows();
    const long d_e = fock.env_dim();
    if (d_s * d_e > tol::oracle_dim_cap) {
        throw std::runtime_error("correlated_initial_state: dimension cap exceeded");
    }
    const ComplexMatrix id_e = ComplexMatrix::Identity(d_e, d_e);
    ComplexMatrix h_prime = kron(prep.h_s_prime, id_e) +
                            kron(ComplexMatrix::Identity(d_s, d_s), env_hamiltonian(bath, fock));
    for (int a = 0; a < system.n_channels(); ++a) {
        h_prime += kron(system.couplings[a], env_coupling_operator(bath, fock, a));
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h_prime);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("correlated_initial_state: eigendecomposition failed");
    }
    // exp(−2b(H−λ₀)) normalized; shifting by the ground energy avoids underflow.
    const double e0 = es.eigenvalues().minCoeff();
    RealVector weights(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        weights(i) = std::exp(-2.0 * prep.b * (es.eigenvalues()(i) - e0));
    }
    weights /= weights.sum();
    JointState state;
    state.matrix = es.eigenvectors() * weights.asDiagonal() * es.eigenvectors().adjoint();
    return state;
}

std::vector<ComplexMatrix> evolve_exact(const JointState& joint0, const SystemSpec& system,
                                        const BathSpec& bath, const FockConfig& fock,
                                        const TimeGrid& grid) {
    grid.validate();
    const ComplexMatrix h = build_joint_hamiltonian(system, bath, fock);
    if (joint0.matrix.rows() != h.rows()) {
        throw std::invalid_argument("evolve_exact: joint state dim mismatch");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("evolve_exact: eigendecomposition failed");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es_s(system.h_s);

    const long d_s = system.h_s.rows();
    std::vector<int> dims{static_cast<int>(d_s)};
    for (int c : fock.cutoffs) dims.push_back(c);

    const ComplexMatrix joint_eigen = es.eigenvectors().adjoint() * joint0.matrix * es.eigenvectors();
    std::vector<ComplexMatrix> out(static_cast<std::size_t>(grid.n_nodes()));
    for (int j = 0; j < grid.n_nodes(); ++j) {
        const double t = grid.node(j);
        ComplexVector phase(es.eigenvalues().size());
        for (Eigen::Index i = 0; i < phase.size(); ++i) {
            phase(i) = std::exp(Complex(0.0, -es.eigenvalues()(i) * t));
        }
        ComplexMatrix evolved = joint_eigen;
        for (Eigen::Index r = 0; r < evolved.rows(); ++r) {
            for (Eigen::Index c = 0; c < evolved.cols(); ++c) {
                evolved(r, c) *= phase(r) * std::conj(phase(c));
            }
        }
        const ComplexMatrix rho_joint =
            es.eigenvectors() * evolved * es.eigenvectors().adjoint();
        ComplexMatrix reduced = partial_trace(rho_joint, dims, 0);
        // Interaction-picture rotation e^{iH_S t} ρ e^{−iH_S t}.
        ComplexVector sys_phase(d_s);
        for (Eigen::Index i = 0; i < d_s; ++i) {
            sys_phase(i) = std::exp(Complex(0.0, es_s.eigenvalues()(i) * t));
        }
        const ComplexMatrix reduced_eigen =
            es_s.eigenvectors().adjoint() * reduced * es_s.eigenvectors();
        ComplexMatrix rotated(d_s, d_s);
        for (Eigen::Index r = 0; r < d_s; ++r) {
            for (Eigen::Index c = 0; c < d_s; ++c) {
                rotated(r, c) = sys_phase(r) * reduced_eigen(r, c) * std::conj(sys_phase(c));
            }
        }
        out[static_cast<std::size_t>(j)] =
            es_s.eigenvectors() * rotated * es_s.eigenvectors().adjoint();
    }
    return out;
}

namespace {

// Heisenberg picture B_α(τ) on the environment space: H_E is diagonal per
// mode, so the rotation is a phase conjugation in the product Fock basis.
ComplexMatrix heisenberg_coupling(const BathSpec& bath, const FockConfig& fock, int alpha,
                                  double tau) {
    const long d = fock.env_dim();
    ComplexMatrix b = env_coupling_operator(bath, fock, alpha);
    // Energy of basis state i.
    RealVector energy = RealVector::Zero(d);
    for (int k = 0; k < bath.n_modes(); ++k) {
        const ComplexMatrix num = env_extend(fock, k, fock_number(fock.cutoffs[k]));
        for (long i = 0; i < d; ++i) energy(i) += bath.modes[k].omega * num(i, i).real();
    }
    for (long r = 0; r < d; ++r) {
        for (long c = 0; c < d; ++c) {
            b(r, c) *= std::exp(Complex(0.0, (energy(r) - energy(c)) * tau));
        }
    }
    return b;
}

}  // namespace

Complex oracle_two_point(const BathSpec& bath, const FockConfig& fock, int alpha,
                         int beta_ch, double tau1, double tau2) {
    const ComplexMatrix omega = env_initial_state(bath, fock);
    const ComplexMatrix b1 = heisenberg_coupling(bath, fock, alpha, tau1);
    const ComplexMatrix b2 = heisenberg_coupling(bath, fock, beta_ch, tau2);
    return (b1 * b2 * omega).trace();
}

Complex oracle_mean(const BathSpec& bath, const FockConfig& fock, int alpha, double tau) {
    const ComplexMatrix omega = env_initial_state(bath, fock);
    return (heisenberg_coupling(bath, fock, alpha, tau) * omega).trace();
}

}  // namespace kelsim
