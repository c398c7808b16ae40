#include "kelsim/propagator.hpp"

#include "kelsim/tolerances.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <stdexcept>

namespace kelsim {

ComplexMatrix SuperKernel::apply(const ComplexMatrix& x) const {
    ComplexMatrix out = left * x + x * right;
    for (std::size_t d = 0; d < dyad_coeff.size(); ++d) {
        out.noalias() += dyad_coeff[d] * (dyad_left[d] * x * dyad_right[d]);
    }
    return out;
}

double SuperKernel::norm_estimate() const {
    double est = max_abs(left) + max_abs(right);
    for (std::size_t d = 0; d < dyad_coeff.size(); ++d) {
        est += std::abs(dyad_coeff[d]) * max_abs(dyad_left[d]) * max_abs(dyad_right[d]);
    }
    return est * static_cast<double>(std::max<Eigen::Index>(left.rows(), 1));
}

namespace {

// exp(kernel) applied to x: scaling by powers of two plus a truncated Taylor
// series per sub-application.
ComplexMatrix apply_exponential(const SuperKernel& kernel, ComplexMatrix x) {
    const double est = kernel.norm_estimate();
    int splits = 0;
    double scale = 1.0;
    if (est > 0.5) {
        splits = static_cast<int>(std::ceil(std::log2(est / 0.5)));
        scale = std::pow(0.5, splits);
    }
    const long reps = 1L << splits;
    for (long r = 0; r < reps; ++r) {
        ComplexMatrix term = x;
        ComplexMatrix acc = x;
        for (int k = 1; k <= 60; ++k) {
            term = kernel.apply(term) * (scale / k);
            acc += term;
            if (max_abs(term) <= 1e-16 * std::max(1.0, max_abs(acc))) break;
        }
        x = std::move(acc);
    }
    return x;
}

inline double theta_of(int j, int k) {
    if (j > k) return 1.0;
    if (j < k) return 0.0;
    return 0.5;
}

// Composite-trapezoid weight of node j for the interval [0, t_m].
inline double quad_weight(int j, int m) { return (j == 0 || j == m) ? 0.5 : 1.0; }

}  // namespace

std::vector<ComplexMatrix> evolve_ferialdi(const SystemSpec& system, const BathSpec& bath,
                                           const ComplexMatrix& rho0, const TimeGrid& grid) {
    system.validate();
    bath.validate();
    grid.validate();
    if (rho0.rows() != system.h_s.rows() || rho0.cols() != system.h_s.cols()) {
        throw std::invalid_argument("evolve_ferialdi: rho0 dim mismatch");
    }

    const int nc = system.n_channels();
    const int nn = grid.n_nodes();
    const double dt = grid.dt();
    const InteractionPictureCache cache(system, grid);

    // Node-pair correlation tables c_αβ(τ_j, τ_k).
    std::vector<ComplexMatrix> corr(static_cast<std::size_t>(nc) * nc);
    for (int a = 0; a < nc; ++a) {
        for (int b = 0; b < nc; ++b) {
            ComplexMatrix& table = corr[static_cast<std::size_t>(a) * nc + b];
            table.resize(nn, nn);
            for (int j = 0; j < nn; ++j) {
                for (int k = 0; k < nn; ++k) {
                    table(j, k) = phys_corr(bath, a, b, grid.node(j), grid.node(k));
                }
            }
        }
    }

    const bool has_mean = bath.state.kind != BathStateKind::thermal;
    std::vector<RealVector> mean_table(static_cast<std::size_t>(nc));
    if (has_mean) {
        for (int a = 0; a < nc; ++a) {
            mean_table[static_cast<std::size_t>(a)].resize(nn);
            for (int j = 0; j < nn; ++j) {
                mean_table[static_cast<std::size_t>(a)](j) =
                    mean_field(bath, a, grid.node(j)).real();
            }
        }
    }

    const Eigen::Index d = rho0.rows();
    std::vector<ComplexMatrix> out(static_cast<std::size_t>(nn));
    out[0] = rho0;
    ComplexMatrix state = rho0;
    const double rho_scale = std::max(1.0, max_abs(rho0));

    for (int n = 0; n + 1 < nn; ++n) {
        SuperKernel kernel;
        kernel.left = ComplexMatrix::Zero(d, d);
        kernel.right = ComplexMatrix::Zero(d, d);

        // Right factors of the cross dyads, grouped by the left operator (β, k):
        // Σ over contributing (α, j) of Δw c_αβ(τ_j,τ_k) A_α(τ_j).
        std::vector<ComplexMatrix> cross(static_cast<std::size_t>(nc) * (n + 2));
        std::vector<bool> cross_used(cross.size(), false);

        for (int j = 0; j <= n + 1; ++j) {
            for (int k = 0; k <= n + 1; ++k) {
                if (j < n && k < n) continue;  // weights unchanged there
                const double w_new = quad_weight(j, n + 1) * quad_weight(k, n + 1);
                const double w_old =
                    (n >= 1 && j <= n && k <= n) ? quad_weight(j, n) * quad_weight(k, n) : 0.0;
                const double dw = (w_new - w_old) * dt * dt;
                if (dw == 0.0) continue;
                const double th_jk = theta_of(j, k);
                const double th_kj = theta_of(k, j);  // θ(0) = 1/2 both ways
                for (int a = 0; a < nc; ++a) {
                    const ComplexMatrix& op_j = cache.at_node(a, j);
                    for (int b = 0; b < nc; ++b) {
                        const Complex c = corr[static_cast<std::size_t>(a) * nc + b](j, k);
                        const Complex wc = dw * c;
                        const ComplexMatrix prod = op_j * cache.at_node(b, k);
                        if (th_jk != 0.0) kernel.left -= th_jk * wc * prod;
                        if (th_kj != 0.0) kernel.right -= th_kj * wc * prod;
                        const std::size_t slot = static_cast<std::size_t>(b) * (n + 2) + k;
                        if (!cross_used[slot]) {
                            cross[slot] = ComplexMatrix::Zero(d, d);
                            cross_used[slot] = true;
                        }
                        cross[slot] += wc * op_j;
                    }
                }
            }
        }
        for (int b = 0; b < nc; ++b) {
            for (int k = 0; k <= n + 1; ++k) {
                const std::size_t slot = static_cast<std::size_t>(b) * (n + 2) + k;
                if (!cross_used[slot]) continue;
                kernel.dyad_left.push_back(cache.at_node(b, k));
                kernel.dyad_right.push_back(std::move(cross[slot]));
                kernel.dyad_coeff.push_back(Complex(1.0, 0.0));
            }
        }

        // Linear mean-field term −i Δ∫ E_α(τ)(A_α X − X A_α) dτ, trapezoid on the new slice.
        if (has_mean) {
            for (int a = 0; a < nc; ++a) {
                const Complex half_dt(0.0, -0.5 * dt);
                const ComplexMatrix lin =
                    half_dt * (mean_table[static_cast<std::size_t>(a)](n) * cache.at_node(a, n) +
                               mean_table[static_cast<std::size_t>(a)](n + 1) *
                                   cache.at_node(a, n + 1));
                kernel.left += lin;
                kernel.right -= lin;
            }
        }

        state = apply_exponential(kernel, std::move(state));
        if (hermiticity_defect(state) > tol::ferialdi_hermiticity * std::max(rho_scale, max_abs(state))) {
            throw std::runtime_error("evolve_ferialdi: non-Hermitian output (discretization failure)");
        }
        out[static_cast<std::size_t>(n) + 1] = state;
    }
    return out;
}

namespace {

// Composite Simpson on [0, t] with `panels` (even) panels.
Complex simpson_1d(const std::function<Complex(double)>& f, double t, int panels) {
    const double h = t / panels;
    Complex acc = f(0.0) + f(t);
    for (int i = 1; i < panels; ++i) {
        acc += f(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return acc * (h / 3.0);
}

// ∫₀ᵗ dτ₁ ∫₀^{τ₁} dτ₂ f(τ₁, τ₂) with composite Simpson in both directions.
Complex simpson_triangle(const std::function<Complex(double, double)>& f, double t,
                         int outer_panels, int inner_panels) {
    auto inner = [&](double tau1) {
        if (tau1 == 0.0) return Complex(0.0, 0.0);
        return simpson_1d([&](double tau2) { return f(tau1, tau2); }, tau1, inner_panels);
    };
    return simpson_1d(inner, t, outer_panels);
}

}  // namespace

ComplexMatrix analytic_dephasing(const SystemSpec& system, const BathSpec& bath,
                                 const ComplexMatrix& rho0, double t,
                                 const ComplexMatrix& basis) {
    system.validate();
    bath.validate();
    const Eigen::Index d = system.h_s.rows();
    if (basis.rows() != d || basis.cols() != d) {
        throw std::invalid_argument("analytic_dephasing: basis dim mismatch");
    }
    if (max_abs(ComplexMatrix(basis.adjoint() * basis) - ComplexMatrix::Identity(d, d)) > 1e-10) {
        throw std::invalid_argument("analytic_dephasing: basis is not unitary");
    }

    // All couplings and H_S must be diagonal in the supplied basis.
    const int nc = system.n_channels();
    RealMatrix eigs(nc, d);  // a_{α,i}
    auto diagonal_in_basis = [&](const ComplexMatrix& op, RealVector& diag) {
        const ComplexMatrix rotated = basis.adjoint() * op * basis;
        const double scale = std::max(1.0, max_abs(rotated));
        ComplexMatrix off = rotated;
        off.diagonal().setZero();
        if (max_abs(off) > 1e-10 * scale) return false;
        diag = rotated.diagonal().real();
        return true;
    };
    RealVector diag(d);
    if (!diagonal_in_basis(system.h_s, diag)) {
        throw std::invalid_argument("analytic_dephasing: H_S not diagonal in basis");
    }
    for (int a = 0; a < nc; ++a) {
        if (!diagonal_in_basis(system.couplings[a], diag)) {
            throw std::invalid_argument("analytic_dephasing: coupling not diagonal in basis");
        }
        eigs.row(a) = diag.transpose();
    }

    // Quadrature of the two θ-weighted double integrals per channel pair;
    // both pieces are smooth once the θ structure is split into triangles.
    // The full-square integral is assembled as their sum so the population
    // matrix elements cancel exactly, not just to quadrature accuracy.
    const int outer = 512, inner = 256;
    ComplexMatrix tri_ordered(nc, nc);   // ∫∫_{τ₁>τ₂} c_αβ(τ₁,τ₂)
    ComplexMatrix tri_reversed(nc, nc);  // ∫∫_{τ₂>τ₁} c_αβ(τ₁,τ₂)
    for (int a = 0; a < nc; ++a) {
        for (int b = 0; b < nc; ++b) {
            auto c_ab = [&](double t1, double t2) { return phys_corr(bath, a, b, t1, t2); };
            tri_ordered(a, b) = simpson_triangle(c_ab, t, outer, inner);
            tri_reversed(a, b) = simpson_triangle(
                [&](double t1, double t2) { return c_ab(t2, t1); }, t, outer, inner);
        }
    }

    RealVector mean_int = RealVector::Zero(nc);
    if (bath.state.kind != BathStateKind::thermal) {
        for (int a = 0; a < nc; ++a) {
            mean_int(a) =
                simpson_1d([&](double tau) { return Complex(mean_field(bath, a, tau)); }, t, 2048)
                    .real();
        }
    }

    // Left/right form of the exponent for diagonal couplings:
    //   Σ_αβ [ Sq_αβ a_βi a_αj − T>_αβ a_αi a_βi − T<_αβ a_αj a_βj ]
    // with Sq = T> + T<, so the i = j element vanishes identically.
    ComplexMatrix rotated = basis.adjoint() * rho0 * basis;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            Complex g(0.0, 0.0);
            for (int a = 0; a < nc; ++a) {
                for (int b = 0; b < nc; ++b) {
                    const Complex square = tri_ordered(a, b) + tri_reversed(a, b);
                    g += square * eigs(b, i) * eigs(a, j) -
                         tri_ordered(a, b) * eigs(a, i) * eigs(b, i) -
                         tri_reversed(a, b) * eigs(a, j) * eigs(b, j);
                }
                g += Complex(0.0, -1.0) * mean_int(a) * (eigs(a, i) - eigs(a, j));
            }
            rotated(i, j) *= std::exp(g);
        }
    }
    return basis * rotated * basis.adjoint();
}

}  // namespace kelsim
