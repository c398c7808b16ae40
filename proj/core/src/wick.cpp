#include "kelsim/wick.hpp"

#include "kelsim/tolerances.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kelsim {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    return factorial(n) / (factorial(k) * factorial(n - k));
}

void enumerate_rec(std::vector<int>& avail, Pairing& current, std::vector<Pairing>& out) {
    if (avail.empty()) {
        out.push_back(current);
        return;
    }
    const int first = avail.front();
    for (std::size_t j = 1; j < avail.size(); ++j) {
        const int partner = avail[static_cast<std::size_t>(j)];
        std::vector<int> rest;
        rest.reserve(avail.size() - 2);
        for (std::size_t i = 1; i < avail.size(); ++i) {
            if (i != j) rest.push_back(avail[i]);
        }
        current.emplace_back(first, partner);
        enumerate_rec(rest, current, out);
        current.pop_back();
    }
}

}  // namespace

std::vector<Pairing> enumerate_pairings(int n) {
    if (n < 0 || n % 2 != 0) throw std::domain_error("enumerate_pairings: n must be even");
    if (n > 12) throw std::domain_error("enumerate_pairings: n capped at 12");
    std::vector<int> avail(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) avail[static_cast<std::size_t>(i)] = i;
    std::vector<Pairing> out;
    Pairing current;
    enumerate_rec(avail, current, out);
    return out;
}

namespace {

Complex wick_rec(const std::function<Complex(int, int)>& moment, std::vector<int>& avail) {
    if (avail.empty()) return {1.0, 0.0};
    const int first = avail.front();
    Complex acc(0.0, 0.0);
    for (std::size_t j = 1; j < avail.size(); ++j) {
        const Complex pair = moment(first, avail[j]);
        if (pair == Complex(0.0, 0.0)) continue;
        std::vector<int> rest;
        rest.reserve(avail.size() - 2);
        for (std::size_t i = 1; i < avail.size(); ++i) {
            if (i != j) rest.push_back(avail[i]);
        }
        acc += pair * wick_rec(moment, rest);
    }
    return acc;
}

}  // namespace

Complex wick_moment(const std::function<Complex(int, int)>& pair_moment, int n) {
    if (n < 0) throw std::domain_error("wick_moment: negative count");
    if (n % 2 != 0) return {0.0, 0.0};  // odd Gaussian moments vanish
    std::vector<int> avail(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) avail[static_cast<std::size_t>(i)] = i;
    return wick_rec(pair_moment, avail);
}

KernelTables KernelTables::build(const BathSpec& bath, const TimeGrid& grid) {
    KernelTables t;
    t.n_nodes = grid.n_nodes();
    t.n_channels = bath.n_channels();
    const int n = t.n_points();
    t.re_c.resize(n, n);
    t.g_ret.resize(n, n);
    for (int p = 0; p < n; ++p) {
        const int ch_p = p / t.n_nodes;
        const double tau_p = grid.node(p % t.n_nodes);
        for (int q = 0; q < n; ++q) {
            const int ch_q = q / t.n_nodes;
            const double tau_q = grid.node(q % t.n_nodes);
            const KeldyshKernels kk = keldysh_kernels(bath, ch_p, ch_q, tau_p, tau_q);
            t.re_c(p, q) = kk.nu_nu;
            t.g_ret(p, q) = kk.retarded;
        }
    }
    return t;
}

Complex mixed_wick_moment(const MomentSpec& spec) {
    const int n = static_cast<int>(spec.points.size());
    const int k = spec.k;
    const auto& t = *spec.tables;
    auto moment = [&](int i, int j) -> Complex {
        const int p = spec.points[static_cast<std::size_t>(i)];
        const int q = spec.points[static_cast<std::size_t>(j)];
        const bool i_nu = i < k;
        const bool j_nu = j < k;
        if (i_nu && j_nu) return {t.re_c(p, q), 0.0};
        if (!i_nu && !j_nu) return {0.0, 0.0};        // E[ηη] = 0
        if (i_nu) return {0.0, t.g_ret(p, q)};        // E[νη] = iG
        return {0.0, t.g_ret(q, p)};                  // E[ην] = E[νη] swapped
    };
    return wick_moment(moment, n);
}

Complex partial_wick_rhs(const MomentSpec& spec) {
    const int n = static_cast<int>(spec.points.size());
    if (n % 2 != 0) throw std::domain_error("partial_wick_rhs: even count required");
    const int m = n / 2;
    const int k = spec.k;
    if (k < m) return {0.0, 0.0};  // θ(k − m)
    const auto& t = *spec.tables;

    double g_product = 1.0;
    for (int i = 0; i < n - k; ++i) {  // pairs (ν_i, η_{k+i})
        g_product *= t.g_ret(spec.points[static_cast<std::size_t>(i)],
                             spec.points[static_cast<std::size_t>(k + i)]);
        if (g_product == 0.0) return {0.0, 0.0};
    }

    // Residual string ν_{2m−k+1} … ν_k (0-based indices 2m−k … k−1).
    const int r_begin = n - k;
    const int r_count = 2 * k - n;
    auto residual_moment = [&](int i, int j) -> Complex {
        return {t.re_c(spec.points[static_cast<std::size_t>(r_begin + i)],
                       spec.points[static_cast<std::size_t>(r_begin + j)]),
                0.0};
    };
    const Complex residual = wick_moment(residual_moment, r_count);

    // i^{2m−k} k!/(2k−2m)!
    Complex i_pow(1.0, 0.0);
    for (int p = 0; p < n - k; ++p) i_pow *= Complex(0.0, 1.0);
    const double prefactor = factorial(k) / factorial(2 * k - n);
    return i_pow * prefactor * g_product * residual;
}

OpStringEvaluator::OpStringEvaluator(const InteractionPictureCache& cache, ComplexMatrix rho0)
    : cache_(&cache), rho0_(std::move(rho0)) {}

const ComplexMatrix& OpStringEvaluator::evaluate(std::vector<OpFactor> factors) {
    // Ascending (node, type, channel); applied in this order so the latest
    // node acts outermost. The tie-break makes the result a pure function of
    // the factor multiset.
    std::sort(factors.begin(), factors.end(), [](const OpFactor& a, const OpFactor& b) {
        if (a.node != b.node) return a.node < b.node;
        if (a.is_commutator != b.is_commutator) return a.is_commutator && !b.is_commutator;
        return a.channel < b.channel;
    });
    std::string key;
    key.reserve(factors.size() * 3);
    for (const auto& f : factors) {
        key.push_back(static_cast<char>(f.node));
        key.push_back(f.is_commutator ? 'C' : 'A');
        key.push_back(static_cast<char>(f.channel));
    }
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;

    ComplexMatrix acc = rho0_;
    for (const auto& f : factors) {
        const ComplexMatrix& op = cache_->at_node(f.channel, f.node);
        acc = f.is_commutator ? commutator(op, acc) : anticommutator(op, acc);
    }
    return memo_.emplace(std::move(key), std::move(acc)).first->second;
}

namespace {

// Odometer over assignments points[0..count) ∈ [0, n_points)^count.
bool advance_assignment(std::vector<int>& points, int n_points) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (++points[i] < n_points) return true;
        points[i] = 0;
    }
    return false;
}

}  // namespace

WickVerifyReport verify_substitution_on_grid(const SystemSpec& system, const BathSpec& bath,
                                             const TimeGrid& grid, const ComplexMatrix& rho0,
                                             int m_max, double tolerance) {
    system.validate();
    bath.validate();
    grid.validate();
    if (m_max < 0 || m_max > 3) {
        throw std::invalid_argument("verify_substitution_on_grid: m_max in [0,3]");
    }
    const KernelTables tables = KernelTables::build(bath, grid);
    const int n_pts = tables.n_points();
    if (n_pts > 16) {
        throw std::invalid_argument("verify_substitution_on_grid: lattice too large (≤16 points)");
    }
    const InteractionPictureCache cache(system, grid);
    OpStringEvaluator evaluator(cache, rho0);

    // Trapezoid weight per lattice point for the [0, t_max] integrals.
    const double dt = grid.dt();
    std::vector<double> weight(static_cast<std::size_t>(n_pts));
    for (int p = 0; p < n_pts; ++p) {
        const int node = p % tables.n_nodes;
        weight[static_cast<std::size_t>(p)] =
            dt * ((node == 0 || node == tables.n_nodes - 1) ? 0.5 : 1.0);
    }

    WickVerifyReport report;
    report.pass = true;
    const Eigen::Index d = rho0.rows();
    for (int m = 0; m <= m_max; ++m) {
        const int n = 2 * m;
        for (int k = 0; k <= n; ++k) {
            ComplexMatrix lhs = ComplexMatrix::Zero(d, d);
            ComplexMatrix rhs = ComplexMatrix::Zero(d, d);
            if (m == 0) {
                lhs = rho0;
                rhs = rho0;
            } else {
                std::vector<int> points(static_cast<std::size_t>(n), 0);
                MomentSpec spec;
                spec.k = k;
                spec.tables = &tables;
                do {
                    spec.points = points;
                    const Complex full = mixed_wick_moment(spec);
                    const Complex part = partial_wick_rhs(spec);
                    if (full == Complex(0, 0) && part == Complex(0, 0)) continue;
                    double w = 1.0;
                    std::vector<OpFactor> factors(static_cast<std::size_t>(n));
                    for (int i = 0; i < n; ++i) {
                        const int p = points[static_cast<std::size_t>(i)];
                        w *= weight[static_cast<std::size_t>(p)];
                        factors[static_cast<std::size_t>(i)] =
                            OpFactor{p % tables.n_nodes, i < k, p / tables.n_nodes};
                    }
                    const ComplexMatrix& op = evaluator.evaluate(factors);
                    lhs += (w * full) * op;
                    rhs += (w * part) * op;
                } while (advance_assignment(points, n_pts));
                // Common (−i)^{2m}/(2m)! · binom(2m, k) prefactor.
                Complex coeff(1.0, 0.0);
                for (int p = 0; p < n; ++p) coeff *= Complex(0.0, -1.0);
                coeff *= binomial(n, k) / factorial(n);
                lhs *= coeff;
                rhs *= coeff;
            }
            const double residual = max_abs(lhs - rhs);
            report.terms.push_back(WickTermReport{m, k, residual});
            if (residual > report.max_residual) {
                report.max_residual = residual;
                if (residual > tolerance) {
                    report.offending_m = m;
                    report.offending_k = k;
                }
            }
        }
    }
    report.pass = report.max_residual <= tolerance;
    return report;
}

RPrimeSeries::RPrimeSeries(const InteractionPictureCache& cache, const BathSpec& bath,
                           const TimeGrid& grid, const ComplexMatrix& rho0, int m_max)
    : tables_(KernelTables::build(bath, grid)), m_max_(m_max), rho0_(rho0) {
    if (m_max < 0 || m_max > 3) throw std::invalid_argument("RPrimeSeries: m_max in [0,3]");
    if (tables_.n_points() > 16) {
        throw std::invalid_argument("RPrimeSeries: lattice too large (≤16 points)");
    }
    OpStringEvaluator evaluator(cache, rho0);
    const int nn = tables_.n_nodes;
    const double dt = grid.dt();
    const Eigen::Index d = rho0.rows();

    terms_.resize(static_cast<std::size_t>(nn));
    expectation_.resize(static_cast<std::size_t>(nn));
    for (int target = 0; target < nn; ++target) {
        auto& node_terms = terms_[static_cast<std::size_t>(target)];
        auto& node_exp = expectation_[static_cast<std::size_t>(target)];
        node_terms.resize(static_cast<std::size_t>(m_max) + 1);
        node_exp.assign(static_cast<std::size_t>(m_max) + 1, ComplexMatrix::Zero(d, d));
        node_exp[0] = rho0;
        node_terms[0].push_back(Monomial{{}, rho0});
        if (target == 0) continue;  // empty integration domain beyond m = 0

        // Lattice restricted to nodes ≤ target, trapezoid weights on [0, τ_target].
        std::vector<int> lattice;
        std::vector<double> weight;
        for (int ch = 0; ch < tables_.n_channels; ++ch) {
            for (int node = 0; node <= target; ++node) {
                lattice.push_back(ch * nn + node);
                weight.push_back(dt * ((node == 0 || node == target) ? 0.5 : 1.0));
            }
        }
        const int n_local = static_cast<int>(lattice.size());

        for (int m = 1; m <= m_max; ++m) {
            const int n = 2 * m;
            std::map<std::vector<int>, ComplexMatrix> monomials;
            ComplexMatrix exp_term = ComplexMatrix::Zero(d, d);
            for (int k = m; k <= n; ++k) {
                Complex coeff(1.0, 0.0);
                for (int p = 0; p < k; ++p) coeff *= Complex(0.0, -1.0);
                coeff *= binomial(k, n - k) / factorial(k);

                std::vector<int> idx(static_cast<std::size_t>(n), 0);
                MomentSpec spec;
                spec.k = k;
                spec.tables = &tables_;
                do {
                    double w = 1.0;
                    double g_product = 1.0;
                    std::vector<OpFactor> factors(static_cast<std::size_t>(n));
                    std::vector<int> points(static_cast<std::size_t>(n));
                    for (int i = 0; i < n; ++i) {
                        const int p = lattice[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
                        points[static_cast<std::size_t>(i)] = p;
                        w *= weight[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
                        factors[static_cast<std::size_t>(i)] =
                            OpFactor{p % nn, i < k, p / nn};
                    }
                    for (int i = 0; i < n - k; ++i) {
                        g_product *= tables_.g_ret(points[static_cast<std::size_t>(i)],
                                                   points[static_cast<std::size_t>(k + i)]);
                        if (g_product == 0.0) break;
                    }
                    if (g_product == 0.0) continue;

                    const Complex scale = coeff * w * g_product;
                    const ComplexMatrix& op = evaluator.evaluate(factors);

                    std::vector<int> residual(points.begin() + (n - k), points.begin() + k);
                    std::sort(residual.begin(), residual.end());
                    auto [it, inserted] =
                        monomials.try_emplace(residual, ComplexMatrix::Zero(d, d));
                    it->second += scale * op;

                    // Expectation path: residual replaced by its ν-only Wick value.
                    auto res_moment = [&](int i, int j) -> Complex {
                        return {tables_.re_c(residual[static_cast<std::size_t>(i)],
                                             residual[static_cast<std::size_t>(j)]),
                                0.0};
                    };
                    const Complex res_val =
                        wick_moment(res_moment, static_cast<int>(residual.size()));
                    exp_term += (scale * res_val) * op;
                } while (advance_assignment(idx, n_local));
            }
            auto& dest = node_terms[static_cast<std::size_t>(m)];
            for (auto& [points, matrix] : monomials) {
                dest.push_back(Monomial{points, std::move(matrix)});
            }
            node_exp[static_cast<std::size_t>(m)] = std::move(exp_term);
        }
    }
}

ComplexMatrix RPrimeSeries::evaluate(const RealVector& nu, int node) const {
    if (nu.size() != tables_.n_points()) {
        throw std::invalid_argument("RPrimeSeries::evaluate: nu size mismatch");
    }
    const auto& node_terms = terms_.at(static_cast<std::size_t>(node));
    ComplexMatrix acc = ComplexMatrix::Zero(rho0_.rows(), rho0_.cols());
    for (const auto& order : node_terms) {
        for (const auto& mono : order) {
            double v = 1.0;
            for (int p : mono.points) v *= nu(p);
            acc += v * mono.matrix;
        }
    }
    return acc;
}

ComplexMatrix RPrimeSeries::expectation(int node, int m_upto) const {
    const auto& node_exp = expectation_.at(static_cast<std::size_t>(node));
    ComplexMatrix acc = ComplexMatrix::Zero(rho0_.rows(), rho0_.cols());
    for (int m = 0; m <= std::min(m_upto, m_max_); ++m) {
        acc += node_exp[static_cast<std::size_t>(m)];
    }
    return acc;
}

double RPrimeSeries::term_norm(int node, int m) const {
    return max_abs(expectation_.at(static_cast<std::size_t>(node))[static_cast<std::size_t>(m)]);
}

}  // namespace kelsim
