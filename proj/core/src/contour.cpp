#include "kelsim/contour.hpp"

#include "kelsim/bath_model.hpp"

#include <stdexcept>

namespace kelsim {

void TimeGrid::validate() const {
    if (!(t_max > 0.0)) throw std::invalid_argument("TimeGrid: t_max must be positive");
    if (n_steps < 0) throw std::invalid_argument("TimeGrid: n_steps must be nonnegative");
}

ContourCovariance build_contour_covariance(const BathSpec& bath, const TimeGrid& grid) {
    bath.validate();
    const ContourLayout layout{bath.n_channels(), grid.n_nodes()};
    const int n = layout.size();

    ComplexMatrix sigma(n, n);
    const Branch branches[2] = {Branch::minus, Branch::plus};
    // Fill the lower triangle and mirror: Σ is complex symmetric by the
    // contour symmetry C_αβ(z₁,z₂) = C_βα(z₂,z₁), and mirroring makes the
    // stored matrix exactly symmetric.
    for (Branch b1 : branches) {
        for (int a = 0; a < layout.n_channels; ++a) {
            for (int j = 0; j < layout.n_nodes; ++j) {
                const int row = layout.flat(b1, a, j);
                for (Branch b2 : branches) {
                    for (int b = 0; b < layout.n_channels; ++b) {
                        for (int k = 0; k < layout.n_nodes; ++k) {
                            const int col = layout.flat(b2, b, k);
                            if (col > row) continue;
                            const Complex v =
                                contour_gf(bath, a, b, grid, ContourPoint{b1, j},
                                           ContourPoint{b2, k});
                            sigma(row, col) = v;
                            sigma(col, row) = v;
                        }
                    }
                }
            }
        }
    }
    return ContourCovariance{layout, std::move(sigma)};
}

void keldysh_rotate(const ComplexVector& xi_minus, const ComplexVector& xi_plus,
                    ComplexVector& nu, ComplexVector& eta) {
    if (xi_minus.size() != xi_plus.size()) {
        throw std::invalid_argument("keldysh_rotate: branch arrays must have equal length");
    }
    nu = 0.5 * (xi_minus + xi_plus);
    eta = 0.5 * (xi_minus - xi_plus);
}

void keldysh_rotate_inverse(const ComplexVector& nu, const ComplexVector& eta,
                            ComplexVector& xi_minus, ComplexVector& xi_plus) {
    if (nu.size() != eta.size()) {
        throw std::invalid_argument("keldysh_rotate_inverse: arrays must have equal length");
    }
    xi_minus = nu + eta;
    xi_plus = nu - eta;
}

}  // namespace kelsim
