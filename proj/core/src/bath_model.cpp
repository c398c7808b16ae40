#include "kelsim/bath_model.hpp"

#include "kelsim/tolerances.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kelsim {

BathState BathState::thermal_state(double beta) {
    BathState s;
    s.kind = BathStateKind::thermal;
    s.beta = beta;
    return s;
}

BathState BathState::displaced_state(double beta, std::vector<double> mean_x,
                                     std::vector<double> mean_p) {
    BathState s;
    s.kind = BathStateKind::displaced;
    s.beta = beta;
    s.mean_x = std::move(mean_x);
    s.mean_p = std::move(mean_p);
    return s;
}

BathState BathState::gaussian_state(std::vector<ModeMoments> moments) {
    BathState s;
    s.kind = BathStateKind::gaussian;
    s.moments = std::move(moments);
    return s;
}

void BathSpec::validate() const {
    if (modes.empty()) throw std::invalid_argument("BathSpec: needs at least one mode");
    for (const auto& m : modes) {
        if (!(m.omega > 0.0) || !(m.mass > 0.0)) {
            throw std::invalid_argument("BathSpec: omega and mass must be positive");
        }
    }
    if (coupling.empty()) throw std::invalid_argument("BathSpec: needs a coupling row per channel");
    for (const auto& row : coupling) {
        if (row.size() != modes.size()) {
            throw std::invalid_argument("BathSpec: coupling row length must equal mode count");
        }
    }
    switch (state.kind) {
        case BathStateKind::thermal:
        case BathStateKind::displaced:
            if (!(state.beta > 0.0)) {
                throw std::invalid_argument("BathSpec: beta must be positive (may be infinite)");
            }
            if (state.kind == BathStateKind::displaced &&
                (state.mean_x.size() != modes.size() || state.mean_p.size() != modes.size())) {
                throw std::invalid_argument("BathSpec: displaced state needs per-mode means");
            }
            break;
        case BathStateKind::gaussian:
            if (state.moments.size() != modes.size()) {
                throw std::invalid_argument("BathSpec: gaussian state needs per-mode moments");
            }
            for (const auto& mm : state.moments) {
                const double det = mm.var_x * mm.var_p - mm.cov_xp * mm.cov_xp;
                if (det < 0.25 - tol::uncertainty_slack) {
                    throw std::invalid_argument("BathSpec: gaussian moments violate uncertainty");
                }
            }
            break;
    }
}

double thermal_coth(double beta, double omega) {
    if (std::isinf(beta)) return 1.0;
    return 1.0 / std::tanh(0.5 * beta * omega);
}

ModeMoments mode_moments(const BathSpec& bath, int k) {
    const auto& m = bath.modes[k];
    ModeMoments mm;
    switch (bath.state.kind) {
        case BathStateKind::thermal:
        case BathStateKind::displaced: {
            const double coth = thermal_coth(bath.state.beta, m.omega);
            mm.var_x = coth / (2.0 * m.mass * m.omega);
            mm.var_p = 0.5 * m.mass * m.omega * coth;
            mm.cov_xp = 0.0;
            if (bath.state.kind == BathStateKind::displaced) {
                mm.mean_x = bath.state.mean_x[k];
                mm.mean_p = bath.state.mean_p[k];
            }
            break;
        }
        case BathStateKind::gaussian:
            mm = bath.state.moments[k];
            break;
    }
    return mm;
}

Complex phys_corr(const BathSpec& bath, int alpha, int beta_ch, double tau1, double tau2) {
    double re = 0.0;
    double im = 0.0;
    for (int k = 0; k < bath.n_modes(); ++k) {
        const auto& m = bath.modes[k];
        const double gg = bath.coupling[alpha][k] * bath.coupling[beta_ch][k];
        if (gg == 0.0) continue;
        const double mw = m.mass * m.omega;
        const ModeMoments mm = mode_moments(bath, k);
        const double c1 = std::cos(m.omega * tau1), s1 = std::sin(m.omega * tau1);
        const double c2 = std::cos(m.omega * tau2), s2 = std::sin(m.omega * tau2);
        // Symmetrized (state-dependent) part from the quadrature moments of
        // X_k(τ) = X cos ωτ + (P/mω) sin ωτ.
        re += gg * (mm.var_x * c1 * c2 + mm.var_p * s1 * s2 / (mw * mw) +
                    mm.cov_xp * (c1 * s2 + s1 * c2) / mw);
        // Antisymmetric part from [X(τ₁), X(τ₂)] = -i sin ω(τ₁-τ₂)/(mω):
        // a c-number, independent of the state.
        im += -gg * std::sin(m.omega * (tau1 - tau2)) / (2.0 * mw);
    }
    return {re, im};
}

Complex mean_field(const BathSpec& bath, int alpha, double tau) {
    if (bath.state.kind == BathStateKind::thermal) return {0.0, 0.0};
    double acc = 0.0;
    for (int k = 0; k < bath.n_modes(); ++k) {
        const auto& m = bath.modes[k];
        const double g = bath.coupling[alpha][k];
        if (g == 0.0) continue;
        const ModeMoments mm = mode_moments(bath, k);
        acc += g * (mm.mean_x * std::cos(m.omega * tau) +
                    mm.mean_p / (m.mass * m.omega) * std::sin(m.omega * tau));
    }
    return {acc, 0.0};
}

Complex contour_gf(const BathSpec& bath, int alpha, int beta_ch, const TimeGrid& grid,
                   ContourPoint z1, ContourPoint z2) {
    if (z1.index < 0 || z1.index >= grid.n_nodes() || z2.index < 0 ||
        z2.index >= grid.n_nodes()) {
        throw std::invalid_argument("contour_gf: node index outside grid");
    }
    const double tau1 = grid.node(z1.index);
    const double tau2 = grid.node(z2.index);

    const Complex greater = phys_corr(bath, alpha, beta_ch, tau1, tau2);
    const Complex lesser = phys_corr(bath, beta_ch, alpha, tau2, tau1);

    if (z1.branch == Branch::plus && z2.branch == Branch::minus) return greater;
    if (z1.branch == Branch::minus && z2.branch == Branch::plus) return lesser;

    // Equal branches: θ-weighted mix with θ(0) = 1/2 at coincident nodes.
    double theta12;  // θ(τ₁ − τ₂)
    if (z1.index > z2.index) theta12 = 1.0;
    else if (z1.index < z2.index) theta12 = 0.0;
    else theta12 = 0.5;

    if (z1.branch == Branch::minus) {
        return theta12 * greater + (1.0 - theta12) * lesser;  // time-ordered
    }
    return theta12 * lesser + (1.0 - theta12) * greater;  // anti-time-ordered
}

KeldyshKernels keldysh_kernels(const BathSpec& bath, int alpha, int beta_ch, double tau1,
                               double tau2) {
    const Complex c = phys_corr(bath, alpha, beta_ch, tau1, tau2);
    double theta;
    if (tau1 > tau2) theta = 1.0;
    else if (tau1 < tau2) theta = 0.0;
    else theta = 0.5;
    return KeldyshKernels{c.real(), theta * c.imag()};
}

RealMatrix nu_covariance(const BathSpec& bath, const TimeGrid& grid) {
    const int nc = bath.n_channels();
    const int nn = grid.n_nodes();
    RealMatrix out(nc * nn, nc * nn);
    for (int a = 0; a < nc; ++a) {
        for (int b = 0; b < nc; ++b) {
            for (int j = 0; j < nn; ++j) {
                for (int k = 0; k < nn; ++k) {
                    out(a * nn + j, b * nn + k) =
                        phys_corr(bath, a, b, grid.node(j), grid.node(k)).real();
                }
            }
        }
    }
    return out;
}

RealMatrix retarded_kernel(const BathSpec& bath, const TimeGrid& grid) {
    const int nc = bath.n_channels();
    const int nn = grid.n_nodes();
    RealMatrix out(nc * nn, nc * nn);
    for (int a = 0; a < nc; ++a) {
        for (int b = 0; b < nc; ++b) {
            for (int j = 0; j < nn; ++j) {
                for (int k = 0; k < nn; ++k) {
                    out(a * nn + j, b * nn + k) =
                        keldysh_kernels(bath, a, b, grid.node(j), grid.node(k)).retarded;
                }
            }
        }
    }
    return out;
}

}  // namespace kelsim
