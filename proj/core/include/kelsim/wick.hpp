// wick.hpp — scalar Wick theorem, the partial Wick substitution that pairs
// every η with a ν, and the truncated single-noise series R'(t).

#pragma once

#include "kelsim/bath_model.hpp"
#include "kelsim/contour.hpp"
#include "kelsim/linalg.hpp"
#include "kelsim/system_model.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace kelsim {

// A perfect matching of {0, ..., n-1}.
using Pairing = std::vector<std::pair<int, int>>;

// All (n−1)!! perfect matchings; throws std::domain_error for odd n or n > 12.
std::vector<Pairing> enumerate_pairings(int n);

// Σ over matchings of Π pair_moment(i, j); 1 for n = 0.
Complex wick_moment(const std::function<Complex(int, int)>& pair_moment, int n);

// A point of the noise lattice: grid node × channel, flat = channel·n_nodes + node.
struct KernelTables {
    int n_nodes = 0;
    int n_channels = 0;
    RealMatrix re_c;   // E[ν_p ν_q]
    RealMatrix g_ret;  // G_{p,q} = θ(τ_p − τ_q) Im c; E[ν_p η_q] = i G_{p,q}

    static KernelTables build(const BathSpec& bath, const TimeGrid& grid);
    int n_points() const { return n_nodes * n_channels; }
};

// A mixed moment E[ν_1 … ν_k η_{k+1} … η_{2m}] with each index assigned a
// lattice point.
struct MomentSpec {
    int k = 0;
    std::vector<int> points;  // size 2m
    const KernelTables* tables = nullptr;
};

// Full scalar Wick evaluation of the mixed string (vanishes for k < m).
Complex mixed_wick_moment(const MomentSpec& spec);

// The substituted form: θ(k−m) i^{2m−k} k!/(2k−2m)! · G_{1,k+1}…G_{2m−k,2m}
// times the exact Wick moment of the residual ν string.
Complex partial_wick_rhs(const MomentSpec& spec);

// Contour/time-ordered application of commutator (𝒞) and anticommutator (𝒜)
// factors to a state, with a deterministic tie-break at coincident nodes so
// the result is a pure function of the factor multiset. Memoized.
struct OpFactor {
    int node = 0;
    bool is_commutator = true;
    int channel = 0;
};

class OpStringEvaluator {
public:
    OpStringEvaluator(const InteractionPictureCache& cache, ComplexMatrix rho0);
    const ComplexMatrix& evaluate(std::vector<OpFactor> factors);

private:
    const InteractionPictureCache* cache_;
    ComplexMatrix rho0_;
    std::map<std::string, ComplexMatrix> memo_;
};

struct WickTermReport {
    int m = 0;
    int k = 0;
    double residual = 0.0;  // ‖LHS − RHS‖_max of the (m,k) term
};

struct WickVerifyReport {
    std::vector<WickTermReport> terms;
    double max_residual = 0.0;
    bool pass = false;
    int offending_m = -1;
    int offending_k = -1;
};

// Exhaustive small-grid check that the full-Wick evaluation of E[R(t)] and
// the partial-Wick form of E[R'(t)] agree term by term in (m, k). Integrals
// are replaced by trapezoid-weighted lattice sums; the identity is exact at
// any grid resolution because both sides share weights and operator strings.
WickVerifyReport verify_substitution_on_grid(const SystemSpec& system, const BathSpec& bath,
                                             const TimeGrid& grid, const ComplexMatrix& rho0,
                                             int m_max, double tolerance);

// Truncated R'(t) series evaluated on sampled real ν lattice values. Terms
// are precomputed as matrices attached to ν monomials, so per-trajectory
// evaluation is a small polynomial contraction.
class RPrimeSeries {
public:
    RPrimeSeries(const InteractionPictureCache& cache, const BathSpec& bath,
                 const TimeGrid& grid, const ComplexMatrix& rho0, int m_max);

    // R'(t_node) for ν sampled on the lattice (flat channel-major layout).
    ComplexMatrix evaluate(const RealVector& nu, int node) const;

    // Exact E[R'(t_node)] truncated at m ≤ m_upto (residual ν moments by Wick).
    ComplexMatrix expectation(int node, int m_upto) const;

    // ‖E-term of order m‖_max at a node; ratio diagnostics for series validity.
    double term_norm(int node, int m) const;

    int m_max() const { return m_max_; }
    int n_points() const { return tables_.n_points(); }

private:
    struct Monomial {
        std::vector<int> points;  // sorted lattice points, degree = size
        ComplexMatrix matrix;
    };
    // terms_[node][m] -> list of monomials; expectation_[node][m] -> matrix.
    std::vector<std::vector<std::vector<Monomial>>> terms_;
    std::vector<std::vector<ComplexMatrix>> expectation_;
    KernelTables tables_;
    int m_max_ = 0;
    ComplexMatrix rho0_;
};

}  // namespace kelsim
