#include "kelsim/svne.hpp"

#include "kelsim/tolerances.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace kelsim {

MeanFieldTable MeanFieldTable::from_bath(const BathSpec& bath, const TimeGrid& grid) {
    MeanFieldTable table;
    const int nc = bath.n_channels();
    const int slots = 2 * grid.n_nodes() - 1;
    table.values.resize(nc, slots);
    const double dt = grid.dt();
    for (int a = 0; a < nc; ++a) {
        for (int s = 0; s < slots; ++s) {
            table.values(a, s) = mean_field(bath, a, 0.5 * s * dt).real();
        }
    }
    return table;
}

TrajectoryStepper::TrajectoryStepper(const InteractionPictureCache& cache,
                                     const TimeGrid& grid, double blowup_guard)
    : cache_(&cache), dt_(grid.dt()), guard_(blowup_guard) {
    if (cache.n_nodes() != grid.n_nodes()) {
        throw std::invalid_argument("TrajectoryStepper: cache grid mismatch");
    }
}

namespace {

// Linear interpolation of a node-sampled coefficient at RK4 stages.
inline Complex stage_coeff(const ComplexVector& values, int n_nodes, int channel, int step,
                           int stage) {
    const Complex v0 = values(channel * n_nodes + step);
    if (stage == 0) return v0;
    const Complex v1 = values(channel * n_nodes + step + 1);
    return stage == 2 ? v1 : 0.5 * (v0 + v1);
}

inline bool guard_ok(const ComplexMatrix& m, double guard) {
    return all_finite(m) && max_abs(m) <= guard;
}

inline bool guard_ok(const ComplexVector& v, double guard) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const Complex& c = v(i);
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
        if (std::abs(c) > guard) return false;
    }
    return true;
}

}  // namespace

void TrajectoryStepper::weighted_sum(ComplexMatrix& out, const ComplexVector& coeff,
                                     int step, int stage, const RealMatrix* shift) const {
    const int nn = cache_->n_nodes();
    out.setZero();
    for (int a = 0; a < cache_->n_channels(); ++a) {
        Complex c = stage_coeff(coeff, nn, a, step, stage);
        if (shift) c += (*shift)(a, 2 * step + stage);
        const ComplexMatrix& op = (stage == 0)   ? cache_->at_node(a, step)
                                  : (stage == 1) ? cache_->at_midpoint(a, step)
                                                 : cache_->at_node(a, step + 1);
        out.noalias() += c * op;
    }
}

bool TrajectoryStepper::step_svne(ComplexMatrix& r, const ComplexVector& nu,
                                  const ComplexVector& eta, int step,
                                  const MeanFieldTable* mean_field) const {
    const Eigen::Index d = r.rows();
    const Complex mi(0.0, -1.0);
    const RealMatrix* shift = mean_field && !mean_field->empty() ? &mean_field->values : nullptr;

    ComplexMatrix com(d, d), acm(d, d), work(d, d);
    ComplexMatrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), stage_state(d, d);

    // RHS: −i[(ν+E)(A R − R A) + η(A R + R A)] stage by stage.
    auto rhs = [&](const ComplexMatrix& state, int stage, ComplexMatrix& out) {
        weighted_sum(com, nu, step, stage, shift);
        weighted_sum(acm, eta, step, stage, nullptr);
        out.noalias() = com * state;
        out.noalias() -= state * com;
        work.noalias() = acm * state;
        work.noalias() += state * acm;
        out += work;
        out *= mi;
    };

    rhs(r, 0, k1);
    stage_state = r + (0.5 * dt_) * k1;
    rhs(stage_state, 1, k2);
    stage_state = r + (0.5 * dt_) * k2;
    rhs(stage_state, 1, k3);
    stage_state = r + dt_ * k3;
    rhs(stage_state, 2, k4);
    r += (dt_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return guard_ok(r, guard_);
}

bool TrajectoryStepper::step_twostate(ComplexMatrix& r, const ComplexVector& xi_minus,
                                      const ComplexVector& xi_plus, int step) const {
    const Eigen::Index d = r.rows();
    const Complex mi(0.0, -1.0);

    ComplexMatrix left(d, d), right(d, d);
    ComplexMatrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);

    // RHS: −i(Σ ξ⁻A) R + i R (Σ ξ⁺A).
    auto rhs = [&](const ComplexMatrix& state, int stage, ComplexMatrix& out) {
        weighted_sum(left, xi_minus, step, stage, nullptr);
        weighted_sum(right, xi_plus, step, stage, nullptr);
        out.noalias() = left * state;
        out.noalias() -= state * right;
        out *= mi;
    };

    rhs(r, 0, k1);
    tmp = r + (0.5 * dt_) * k1;
    rhs(tmp, 1, k2);
    tmp = r + (0.5 * dt_) * k2;
    rhs(tmp, 1, k3);
    tmp = r + dt_ * k3;
    rhs(tmp, 2, k4);
    r += (dt_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return guard_ok(r, guard_);
}

bool TrajectoryStepper::step_two_state_vectors(TwoStateVec& psi, const ComplexVector& xi_minus,
                                               const ComplexVector& xi_plus, int step) const {
    const Eigen::Index d = psi.psi_minus.size();
    const Complex mi(0.0, -1.0);
    ComplexMatrix gen(d, d);

    auto advance = [&](ComplexVector& v, const ComplexVector& xi) {
        ComplexVector k1(d), k2(d), k3(d), k4(d), tmp(d);
        weighted_sum(gen, xi, step, 0, nullptr);
        k1 = mi * (gen * v);
        weighted_sum(gen, xi, step, 1, nullptr);
        tmp = v + (0.5 * dt_) * k1;
        k2 = mi * (gen * tmp);
        tmp = v + (0.5 * dt_) * k2;
        k3 = mi * (gen * tmp);
        weighted_sum(gen, xi, step, 2, nullptr);
        tmp = v + dt_ * k3;
        k4 = mi * (gen * tmp);
        v += (dt_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };

    advance(psi.psi_minus, xi_minus);
    // The plus ket represents the bra of R = |ψ₋⟩⟨ψ₊|, so it sees conj(ξ⁺).
    advance(psi.psi_plus, ComplexVector(xi_plus.conjugate()));
    return guard_ok(psi.psi_minus, guard_) && guard_ok(psi.psi_plus, guard_);
}

bool EnsembleResult::reliable() const {
    return n_requested > 0 &&
           static_cast<double>(n_flagged) <= tol::max_flagged_fraction * n_requested;
}

namespace {

// Binary-counter pairwise summation: partial sums live at power-of-two
// levels, so n identical addends reduce exactly for power-of-two n and the
// fold topology is a pure function of the addend count.
template <typename T>
class PairwiseSum {
public:
    void add(T value) {
        std::size_t level = 0;
        while (level < occupied_.size() && occupied_[level]) {
            value = levels_[level] + value;
            occupied_[level] = false;
            ++level;
        }
        if (level == occupied_.size()) {
            levels_.push_back(value);
            occupied_.push_back(true);
        } else {
            levels_[level] = value;
            occupied_[level] = true;
        }
    }

    T total(const T& zero) const {
        T acc = zero;
        for (std::size_t level = 0; level < occupied_.size(); ++level) {
            if (occupied_[level]) acc = acc + levels_[level];
        }
        return acc;
    }

private:
    std::vector<T> levels_;
    std::vector<bool> occupied_;
};

// Pairwise fold over an index range, recursion split at the midpoint; the
// topology depends only on the range size.
template <typename T, typename Get>
T pairwise_fold(std::size_t begin, std::size_t end, const Get& get) {
    if (end - begin == 1) return get(begin);
    const std::size_t mid = begin + (end - begin) / 2;
    return pairwise_fold<T>(begin, mid, get) + pairwise_fold<T>(mid, end, get);
}

// Per-block accumulators; blocks are combined pairwise in index order
// afterwards, so the reduction is independent of the thread count.
struct BlockAccum {
    std::vector<PairwiseSum<ComplexMatrix>> sum_rho;
    std::vector<RealMatrix> sumsq_re;
    std::vector<RealMatrix> sumsq_im;
    std::vector<std::vector<PairwiseSum<Complex>>> obs_sum;  // [obs][node]
    std::vector<std::vector<double>> obs_sumsq_re;
    std::vector<std::vector<double>> obs_sumsq_im;
    std::vector<PairwiseSum<Complex>> trace_sum;
    std::vector<double> trace_sumsq_re;
    std::vector<double> trace_sumsq_im;
    long used = 0;
    long flagged = 0;

    BlockAccum(int n_nodes, Eigen::Index d, std::size_t n_obs) {
        sum_rho.resize(static_cast<std::size_t>(n_nodes));
        sumsq_re.assign(static_cast<std::size_t>(n_nodes), RealMatrix::Zero(d, d));
        sumsq_im.assign(static_cast<std::size_t>(n_nodes), RealMatrix::Zero(d, d));
        obs_sum.assign(n_obs, std::vector<PairwiseSum<Complex>>(
                                  static_cast<std::size_t>(n_nodes)));
        obs_sumsq_re.assign(n_obs, std::vector<double>(static_cast<std::size_t>(n_nodes), 0.0));
        obs_sumsq_im.assign(n_obs, std::vector<double>(static_cast<std::size_t>(n_nodes), 0.0));
        trace_sum.resize(static_cast<std::size_t>(n_nodes));
        trace_sumsq_re.assign(static_cast<std::size_t>(n_nodes), 0.0);
        trace_sumsq_im.assign(static_cast<std::size_t>(n_nodes), 0.0);
    }

    void add_node(int node, const ComplexMatrix& r, const std::vector<ComplexMatrix>& obs) {
        const auto ju = static_cast<std::size_t>(node);
        sum_rho[ju].add(r);
        sumsq_re[ju] += r.real().cwiseProduct(r.real());
        sumsq_im[ju] += r.imag().cwiseProduct(r.imag());
        const Complex tr = r.trace();
        trace_sum[ju].add(tr);
        trace_sumsq_re[ju] += tr.real() * tr.real();
        trace_sumsq_im[ju] += tr.imag() * tr.imag();
        for (std::size_t o = 0; o < obs.size(); ++o) {
            const Complex v = (obs[o] * r).trace();
            obs_sum[o][ju].add(v);
            obs_sumsq_re[o][ju] += v.real() * v.real();
            obs_sumsq_im[o][ju] += v.imag() * v.imag();
        }
    }
};

}  // namespace

EnsembleResult run_ensemble(const InteractionPictureCache& cache, const NoiseSampler& sampler,
                            const TimeGrid& grid, const ComplexMatrix& rho0,
                            const EnsembleOptions& options,
                            const std::vector<ComplexMatrix>& observables,
                            const MeanFieldTable* mean_field) {
    if (rho0.rows() != rho0.cols()) {
        throw std::invalid_argument("run_ensemble: rho0 must be square");
    }
    if (sampler.n_nodes() != grid.n_nodes() || sampler.n_channels() != cache.n_channels()) {
        throw std::invalid_argument("run_ensemble: sampler/grid/cache mismatch");
    }
    if (options.n_traj <= 0) {
        throw std::invalid_argument("run_ensemble: n_traj must be positive");
    }

    const int n_nodes = grid.n_nodes();
    const Eigen::Index d = rho0.rows();
    const long block_size = std::max(1, options.block_size);
    const long n_blocks = (options.n_traj + block_size - 1) / block_size;
    const TrajectoryStepper stepper(cache, grid, options.blowup_guard);

    std::vector<BlockAccum> blocks(static_cast<std::size_t>(n_blocks),
                                   BlockAccum(n_nodes, d, observables.size()));

    auto run_block = [&](long b) {
        BlockAccum& acc = blocks[static_cast<std::size_t>(b)];
        const long begin = b * block_size;
        const long end = std::min(options.n_traj, begin + block_size);
        std::vector<ComplexMatrix> nodes(static_cast<std::size_t>(n_nodes));
        ComplexVector xi_minus, xi_plus;
        for (long i = begin; i < end; ++i) {
            const NoiseTrajectory noise = sampler.sample(static_cast<std::uint64_t>(i));
            ComplexMatrix r = rho0;
            nodes[0] = r;
            bool ok = true;
            if (options.kind == UnravelingKind::two_state) {
                keldysh_rotate_inverse(noise.nu, noise.eta, xi_minus, xi_plus);
            }
            for (int s = 0; s < grid.n_steps && ok; ++s) {
                switch (options.kind) {
                    case UnravelingKind::two_state:
                        ok = stepper.step_twostate(r, xi_minus, xi_plus, s);
                        break;
                    case UnravelingKind::svne:
                        ok = stepper.step_svne(r, noise.nu, noise.eta, s, nullptr);
                        break;
                    case UnravelingKind::svne_shifted:
                        ok = stepper.step_svne(r, noise.nu, noise.eta, s, mean_field);
                        break;
                }
                if (ok) nodes[static_cast<std::size_t>(s) + 1] = r;
            }
            if (!ok) {
                ++acc.flagged;
                continue;
            }
            for (int j = 0; j < n_nodes; ++j) acc.add_node(j, nodes[static_cast<std::size_t>(j)], observables);
            ++acc.used;
        }
    };

    const int threads = std::max(1, options.threads);
    if (threads == 1 || n_blocks == 1) {
        for (long b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::atomic<long> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&]() {
                for (long b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) {
                    run_block(b);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    // Deterministic fold: pairwise over blocks in index order.
    EnsembleResult result;
    result.base_seed = sampler.config().base_seed;
    result.n_requested = options.n_traj;
    for (const auto& b : blocks) {
        result.n_used += b.used;
        result.n_flagged += b.flagged;
    }
    if (result.n_used == 0) {
        throw std::runtime_error("run_ensemble: all trajectories were flagged");
    }

    const double n = static_cast<double>(result.n_used);
    const std::size_t nb = blocks.size();
    const ComplexMatrix zero_m = ComplexMatrix::Zero(d, d);
    result.mean_rho.resize(static_cast<std::size_t>(n_nodes));
    result.std_err.resize(static_cast<std::size_t>(n_nodes));
    result.trace_mean.resize(static_cast<std::size_t>(n_nodes));
    result.trace_se.resize(static_cast<std::size_t>(n_nodes));
    for (int j = 0; j < n_nodes; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const ComplexMatrix sum = pairwise_fold<ComplexMatrix>(
            0, nb, [&](std::size_t b) { return blocks[b].sum_rho[ju].total(zero_m); });
        result.mean_rho[ju] = sum / n;

        RealMatrix sumsq_re = RealMatrix::Zero(d, d);
        RealMatrix sumsq_im = RealMatrix::Zero(d, d);
        double tr_sq_re = 0.0, tr_sq_im = 0.0;
        for (const auto& b : blocks) {
            sumsq_re += b.sumsq_re[ju];
            sumsq_im += b.sumsq_im[ju];
            tr_sq_re += b.trace_sumsq_re[ju];
            tr_sq_im += b.trace_sumsq_im[ju];
        }
        RealMatrix var_re =
            (sumsq_re / n - result.mean_rho[ju].real().cwiseAbs2()).cwiseMax(0.0);
        RealMatrix var_im =
            (sumsq_im / n - result.mean_rho[ju].imag().cwiseAbs2()).cwiseMax(0.0);
        result.std_err[ju] = ((var_re + var_im) / n).cwiseSqrt();

        const Complex tr_mean =
            pairwise_fold<Complex>(
                0, nb, [&](std::size_t b) { return blocks[b].trace_sum[ju].total(Complex(0, 0)); }) /
            n;
        result.trace_mean[ju] = tr_mean;
        const double tvar_re = std::max(0.0, tr_sq_re / n - tr_mean.real() * tr_mean.real());
        const double tvar_im = std::max(0.0, tr_sq_im / n - tr_mean.imag() * tr_mean.imag());
        result.trace_se[ju] = std::sqrt((tvar_re + tvar_im) / n);
    }

    result.observables.resize(observables.size());
    for (std::size_t o = 0; o < observables.size(); ++o) {
        auto& series = result.observables[o];
        series.mean.resize(static_cast<std::size_t>(n_nodes));
        series.se_re.resize(static_cast<std::size_t>(n_nodes));
        series.se_im.resize(static_cast<std::size_t>(n_nodes));
        for (int j = 0; j < n_nodes; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            const Complex mean =
                pairwise_fold<Complex>(
                    0, nb,
                    [&](std::size_t b) { return blocks[b].obs_sum[o][ju].total(Complex(0, 0)); }) /
                n;
            series.mean[ju] = mean;
            double sq_re = 0.0, sq_im = 0.0;
            for (const auto& b : blocks) {
                sq_re += b.obs_sumsq_re[o][ju];
                sq_im += b.obs_sumsq_im[o][ju];
            }
            const double var_re = std::max(0.0, sq_re / n - mean.real() * mean.real());
            const double var_im = std::max(0.0, sq_im / n - mean.imag() * mean.imag());
            series.se_re[ju] = std::sqrt(var_re / n);
            series.se_im[ju] = std::sqrt(var_im / n);
        }
    }

    // Hermiticity diagnostic: mean ρ should be Hermitian within its own
    // statistical resolution at every node.
    double max_z = 0.0;
    for (int j = 1; j < n_nodes; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const ComplexMatrix& m = result.mean_rho[ju];
        const RealMatrix& se = result.std_err[ju];
        for (Eigen::Index a = 0; a < d; ++a) {
            for (Eigen::Index b = 0; b < d; ++b) {
                const double defect = std::abs(m(a, b) - std::conj(m(b, a)));
                const double scale = std::sqrt(se(a, b) * se(a, b) + se(b, a) * se(b, a));
                if (scale > 0.0) max_z = std::max(max_z, defect / scale);
            }
        }
    }
    result.max_hermiticity_z = max_z;
    return result;
}

}  // namespace kelsim
