#include "kelsim/propagator.hpp"

#include "kelsim/oracle.hpp"
#include "kelsim/tolerances.hpp"
#include "test_support.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>

using namespace kelsim;

namespace {

SystemSpec dephasing_qubit(double omega0) {
    SystemSpec spec;
    spec.h_s = 0.5 * omega0 * pauli_z();
    spec.couplings = {pauli_z()};
    return spec;
}

SystemSpec spinboson_qubit(double omega0) {
    SystemSpec spec;
    spec.h_s = 0.5 * omega0 * pauli_z();
    spec.couplings = {pauli_x()};
    return spec;
}

BathSpec one_mode(double omega, double mass, double g, double beta) {
    BathSpec bath;
    bath.modes = {BathMode{omega, mass}};
    bath.coupling = {{g}};
    bath.state = BathState::thermal_state(beta);
    return bath;
}

ComplexMatrix plus_state() {
    ComplexVector psi(2);
    psi << 1.0, 1.0;
    psi /= std::sqrt(2.0);
    return psi * psi.adjoint();
}

}  // namespace

TEST_CASE("zero coupling freezes the interaction-picture state") {
    const SystemSpec sys = spinboson_qubit(1.0);
    const BathSpec bath = one_mode(1.0, 1.0, 0.0, 1.0);
    RngStream rng(91, 0);
    const ComplexMatrix rho0 = test::random_density(rng, 2);
    const TimeGrid grid{2.0, 40};
    for (const auto& state : evolve_ferialdi(sys, bath, rho0, grid)) {
        CHECK(max_abs(state - rho0) < 1e-13);
    }
    CHECK(max_abs(analytic_dephasing(dephasing_qubit(1.0), bath, rho0, 2.0,
                                     ComplexMatrix::Identity(2, 2)) -
                  rho0) < 1e-13);
}

TEST_CASE("analytic dephasing freezes populations and matches the Fock oracle") {
    const double omega0 = 1.0, omega = 1.3, mass = 1.0, g = 0.45, beta = 1.2;
    const SystemSpec sys = dephasing_qubit(omega0);
    const BathSpec bath = one_mode(omega, mass, g, beta);
    const ComplexMatrix rho0 = plus_state();
    const ComplexMatrix basis = ComplexMatrix::Identity(2, 2);

    const FockConfig fock{{40}, 1e-8};
    JointState joint;
    joint.matrix = kron(rho0, env_initial_state(bath, fock));
    const TimeGrid grid{3.0, 6};
    const auto oracle_series = evolve_exact(joint, sys, bath, fock, grid);

    for (int j = 0; j <= grid.n_steps; ++j) {
        const ComplexMatrix closed = analytic_dephasing(sys, bath, rho0, grid.node(j), basis);
        // Populations frozen.
        CHECK(std::abs(closed(0, 0) - rho0(0, 0)) < 1e-12);
        CHECK(std::abs(closed(1, 1) - rho0(1, 1)) < 1e-12);
        // Coherence magnitude against the truncated-Fock oracle.
        const auto& oracle_state = oracle_series[static_cast<std::size_t>(j)];
        CHECK(std::abs(std::abs(closed(0, 1)) - std::abs(oracle_state(0, 1))) <
              tol::oracle_corr);
        // Full matrix element (phase included).
        CHECK(std::abs(closed(0, 1) - oracle_state(0, 1)) < 1e-5);
    }

    // Non-commuting coupling is rejected.
    CHECK_THROWS_AS((void)analytic_dephasing(spinboson_qubit(1.0), bath, rho0, 1.0, basis),
                    std::invalid_argument);
}

TEST_CASE("ferialdi splitting converges to the dephasing closed form") {
    const SystemSpec sys = dephasing_qubit(0.8);
    const BathSpec bath = one_mode(1.1, 1.0, 0.4, 1.5);
    const ComplexMatrix rho0 = plus_state();
    const double t_max = 2.0;

    const ComplexMatrix exact =
        analytic_dephasing(sys, bath, rho0, t_max, ComplexMatrix::Identity(2, 2));

    const TimeGrid grid{t_max, 400};
    const auto series = evolve_ferialdi(sys, bath, rho0, grid);
    CHECK(max_abs(series.back() - exact) < tol::dephasing_ferialdi);

    // Hermiticity and trace stay within discretization tolerance everywhere.
    for (const auto& state : series) {
        CHECK(hermiticity_defect(state) < tol::ferialdi_hermiticity);
        CHECK(std::abs(state.trace() - Complex(1, 0)) < 1e-6);
    }

    // At least first-order convergence; the commuting case has no ordering
    // error, so the trapezoid weights push it to second order.
    const auto coarse = evolve_ferialdi(sys, bath, rho0, TimeGrid{t_max, 100});
    const auto fine = evolve_ferialdi(sys, bath, rho0, TimeGrid{t_max, 200});
    const double e_coarse = max_abs(coarse.back() - exact);
    const double e_fine = max_abs(fine.back() - exact);
    CHECK(e_coarse / e_fine > 1.8);
    CHECK(e_coarse / e_fine < 5.0);
}

TEST_CASE("ferialdi splitting tracks the spin-boson oracle") {
    const SystemSpec sys = spinboson_qubit(1.0);
    const BathSpec bath = one_mode(1.2, 1.0, 0.3, 2.0);
    const ComplexMatrix rho0 = plus_state();
    const double t_max = 2.0;

    const FockConfig fock{{14}, 1e-8};
    JointState joint;
    joint.matrix = kron(rho0, env_initial_state(bath, fock));
    const TimeGrid obs_grid{t_max, 8};
    const auto oracle_series = evolve_exact(joint, sys, bath, fock, obs_grid);

    const TimeGrid grid{t_max, 800};
    const auto series = evolve_ferialdi(sys, bath, rho0, grid);
    // Compare at the oracle nodes (every 100th fine node).
    double worst = 0.0;
    for (int j = 0; j <= obs_grid.n_steps; ++j) {
        worst = std::max(worst,
                         trace_distance(series[static_cast<std::size_t>(j) * 100],
                                        oracle_series[static_cast<std::size_t>(j)]));
    }
    CHECK(worst < tol::spinboson_ferialdi);
}

TEST_CASE("displaced bath adds the mean-field drive to the splitting") {
    // Oscillating mean field on a commuting model has a closed form through
    // analytic_dephasing; the splitting must follow it.
    const SystemSpec sys = dephasing_qubit(0.0);
    BathSpec bath = one_mode(1.4, 1.0, 0.35, 2.0);
    bath.state = BathState::displaced_state(2.0, {1.1}, {0.3});
    const ComplexMatrix rho0 = plus_state();
    const double t_max = 1.5;

    const ComplexMatrix exact =
        analytic_dephasing(sys, bath, rho0, t_max, ComplexMatrix::Identity(2, 2));
    const auto series = evolve_ferialdi(sys, bath, rho0, TimeGrid{t_max, 400});
    CHECK(max_abs(series.back() - exact) < tol::dephasing_ferialdi);
}
