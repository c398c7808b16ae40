#include "kelsim/noise_sampler.hpp"

#include "kelsim/tolerances.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace kelsim {

TakagiFactor takagi_factor(const ComplexMatrix& sigma, double clip) {
    const Eigen::Index n = sigma.rows();
    if (sigma.cols() != n) throw std::invalid_argument("takagi_factor: input must be square");
    if (max_abs(sigma - sigma.transpose()) > tol::takagi_symmetry * std::max(1.0, max_abs(sigma))) {
        throw std::invalid_argument("takagi_factor: input is not complex symmetric");
    }
    if (clip < 0.0) throw std::invalid_argument("takagi_factor: clip must be nonnegative");

    // Real symmetric embedding: M [x;y] = σ [x;y] with u = x + iy satisfying
    // Σ conj(u) = σ u. Eigenvalues come in ± pairs; the positive ones are the
    // Takagi values and Σ = Σ_j σ_j u_j u_jᵀ over them.
    const RealMatrix re = sigma.real();
    const RealMatrix im = sigma.imag();
    RealMatrix embed(2 * n, 2 * n);
    embed.topLeftCorner(n, n) = re;
    embed.topRightCorner(n, n) = im;
    embed.bottomLeftCorner(n, n) = im;
    embed.bottomRightCorner(n, n) = -re;

    Eigen::SelfAdjointEigenSolver<RealMatrix> es(embed);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("takagi_factor: eigendecomposition failed");
    }
    const RealVector& vals = es.eigenvalues();  // ascending
    const double max_val = vals.size() ? std::abs(vals(vals.size() - 1)) : 0.0;
    const double threshold = clip * max_val;

    std::vector<Eigen::Index> retained;
    double total = 0.0, dropped = 0.0;
    for (Eigen::Index j = 0; j < vals.size(); ++j) {
        if (vals(j) <= 0.0) continue;  // each positive value has a mirrored negative twin
        total += vals(j);
        if (vals(j) > threshold) retained.push_back(j);
        else dropped += vals(j);
    }

    TakagiFactor out;
    out.b.resize(n, static_cast<Eigen::Index>(retained.size()));
    out.values.resize(static_cast<Eigen::Index>(retained.size()));
    // Descending order of the retained values.
    for (std::size_t c = 0; c < retained.size(); ++c) {
        const Eigen::Index j = retained[retained.size() - 1 - c];
        const double sigma_j = vals(j);
        out.values(static_cast<Eigen::Index>(c)) = sigma_j;
        const RealVector x = es.eigenvectors().col(j).head(n);
        const RealVector y = es.eigenvectors().col(j).tail(n);
        const double scale = std::sqrt(sigma_j);
        for (Eigen::Index i = 0; i < n; ++i) {
            out.b(i, static_cast<Eigen::Index>(c)) = scale * Complex(x(i), y(i));
        }
    }
    out.clipped_mass = total > 0.0 ? dropped / total : 0.0;
    return out;
}

NoiseSampler::NoiseSampler(const BathSpec& bath, const TimeGrid& grid,
                           const SamplerConfig& config)
    : config_(config), layout_{bath.n_channels(), grid.n_nodes()} {
    bath.validate();
    grid.validate();

    if (config_.method == SamplerMethod::contour_takagi) {
        const ContourCovariance cov = build_contour_covariance(bath, grid);
        TakagiFactor factor = takagi_factor(cov.matrix, config_.eigen_clip);
        takagi_b_ = std::move(factor.b);
        clipped_mass_ = factor.clipped_mass;
        return;
    }

    // Rotated construction: ν = A x (real), η = G(ix + y) with AAᵀ = Σνν and
    // AGᵀ = K, which realizes E[νν] = Re c, E[νη] = iK, E[ηη] = 0.
    const RealMatrix sigma_nn = nu_covariance(bath, grid);
    const RealMatrix kernel = retarded_kernel(bath, grid);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(sigma_nn);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("NoiseSampler: Σνν eigendecomposition failed");
    }
    const RealVector& vals = es.eigenvalues();
    const double max_val = vals.size() ? std::max(0.0, vals(vals.size() - 1)) : 0.0;
    const double threshold = std::max(config_.eigen_clip * max_val, 0.0);

    std::vector<Eigen::Index> retained;
    double total = 0.0, dropped = 0.0;
    for (Eigen::Index j = 0; j < vals.size(); ++j) {
        const double v = vals(j);
        if (v > threshold) {
            retained.push_back(j);
            total += v;
        } else {
            // Negative eigenvalues are roundoff of a PSD Gram matrix; clip.
            dropped += std::abs(v);
            total += std::abs(v);
        }
    }
    clipped_mass_ = total > 0.0 ? dropped / total : 0.0;

    const Eigen::Index n = sigma_nn.rows();
    const Eigen::Index r = static_cast<Eigen::Index>(retained.size());
    nu_factor_.resize(n, r);
    RealMatrix pinv_a(r, n);  // pinv(A) = diag(1/√λ) Vᵀ on the retained space
    for (Eigen::Index c = 0; c < r; ++c) {
        const Eigen::Index j = retained[static_cast<std::size_t>(c)];
        const double root = std::sqrt(vals(j));
        nu_factor_.col(c) = root * es.eigenvectors().col(j);
        pinv_a.row(c) = es.eigenvectors().col(j).transpose() / root;
    }
    const RealMatrix g_t = pinv_a * kernel;  // Gᵀ, r × n

    // The construction only reproduces E[νη] = iK when K's columns lie in
    // the ν row space; otherwise the projector drops part of the retarded
    // kernel and the method is invalid for this bath/grid.
    const double residual = (nu_factor_ * g_t - kernel).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, kernel.cwiseAbs().maxCoeff());
    if (residual > tol::rowspace_residual * scale) {
        throw DegeneracyError(
            "rotated_factorization: retarded kernel leaves the ν covariance row space "
            "(residual " + std::to_string(residual) + "); use contour_takagi");
    }
    eta_gain_ = g_t.transpose();
}

ComplexVector NoiseSampler::draw_xi(RngStream& rng) const {
    const Eigen::Index r = takagi_b_.cols();
    RealVector w(r);
    for (Eigen::Index i = 0; i < r; ++i) w(i) = rng.next_normal();
    return takagi_b_ * w;
}

NoiseSampler NoiseSampler::reseeded(std::uint64_t base_seed) const {
    NoiseSampler out = *this;
    out.config_.base_seed = base_seed;
    return out;
}

ComplexVector NoiseSampler::sample_contour(std::uint64_t trajectory_index) const {
    if (config_.method != SamplerMethod::contour_takagi) {
        throw std::logic_error("sample_contour: only available for contour_takagi");
    }
    RngStream rng(config_.base_seed, trajectory_index);
    return draw_xi(rng);
}

NoiseTrajectory NoiseSampler::sample(std::uint64_t trajectory_index) const {
    NoiseTrajectory traj;
    traj.trajectory_index = trajectory_index;
    RngStream rng(config_.base_seed, trajectory_index);

    const int block = layout_.n_channels * layout_.n_nodes;
    if (config_.method == SamplerMethod::contour_takagi) {
        const ComplexVector xi = draw_xi(rng);
        const ComplexVector xi_minus = xi.head(block);
        const ComplexVector xi_plus = xi.tail(block);
        keldysh_rotate(xi_minus, xi_plus, traj.nu, traj.eta);
        return traj;
    }

    const Eigen::Index r = nu_factor_.cols();
    RealVector x(r), y(r);
    for (Eigen::Index i = 0; i < r; ++i) x(i) = rng.next_normal();
    for (Eigen::Index i = 0; i < r; ++i) y(i) = rng.next_normal();
    const RealVector nu_real = nu_factor_ * x;
    traj.nu = nu_real.cast<Complex>();
    ComplexVector mix(r);
    for (Eigen::Index i = 0; i < r; ++i) mix(i) = Complex(y(i), x(i));  // ix + y
    traj.eta = eta_gain_ * mix;
    return traj;
}

EmpiricalMoments::EmpiricalMoments(int dim)
    : sum_nn_(ComplexMatrix::Zero(dim, dim)),
      sum_ne_(ComplexMatrix::Zero(dim, dim)),
      sum_ee_(ComplexMatrix::Zero(dim, dim)),
      sumsq_nn_(RealMatrix::Zero(dim, dim)),
      sumsq_ne_(RealMatrix::Zero(dim, dim)),
      sumsq_ee_(RealMatrix::Zero(dim, dim)),
      sum_nu_(ComplexVector::Zero(dim)),
      sum_eta_(ComplexVector::Zero(dim)),
      sumsq_nu_(RealVector::Zero(dim)),
      sumsq_eta_(RealVector::Zero(dim)),
      work_(dim, dim) {}

void EmpiricalMoments::add(const NoiseTrajectory& traj) {
    const Eigen::Index n = sum_nn_.rows();
    if (traj.nu.size() != n || traj.eta.size() != n) {
        throw std::invalid_argument("EmpiricalMoments: trajectory size mismatch");
    }
    work_.noalias() = traj.nu * traj.nu.transpose();
    sum_nn_ += work_;
    sumsq_nn_ += work_.cwiseAbs2();
    work_.noalias() = traj.nu * traj.eta.transpose();
    sum_ne_ += work_;
    sumsq_ne_ += work_.cwiseAbs2();
    work_.noalias() = traj.eta * traj.eta.transpose();
    sum_ee_ += work_;
    sumsq_ee_ += work_.cwiseAbs2();
    sum_nu_ += traj.nu;
    sumsq_nu_ += traj.nu.cwiseAbs2();
    sum_eta_ += traj.eta;
    sumsq_eta_ += traj.eta.cwiseAbs2();
    ++count_;
}

ComplexVector EmpiricalMoments::mean_nu() const {
    if (count_ == 0) throw std::logic_error("EmpiricalMoments: no samples");
    return sum_nu_ / static_cast<double>(count_);
}

ComplexVector EmpiricalMoments::mean_eta() const {
    if (count_ == 0) throw std::logic_error("EmpiricalMoments: no samples");
    return sum_eta_ / static_cast<double>(count_);
}

RealVector EmpiricalMoments::se_vec(const ComplexVector& s, const RealVector& sq) const {
    if (count_ < 2) throw std::logic_error("EmpiricalMoments: need at least two samples");
    const double n = static_cast<double>(count_);
    RealVector out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double var = std::max(0.0, sq(i) / n - std::norm(s(i) / n));
        out(i) = std::sqrt(var / n);
    }
    return out;
}

RealVector EmpiricalMoments::se_nu() const { return se_vec(sum_nu_, sumsq_nu_); }
RealVector EmpiricalMoments::se_eta() const { return se_vec(sum_eta_, sumsq_eta_); }

ComplexMatrix EmpiricalMoments::scaled(const ComplexMatrix& s) const {
    if (count_ == 0) throw std::logic_error("EmpiricalMoments: no samples");
    return s / static_cast<double>(count_);
}

RealMatrix EmpiricalMoments::se(const ComplexMatrix& s, const RealMatrix& sq) const {
    if (count_ < 2) throw std::logic_error("EmpiricalMoments: need at least two samples");
    const double n = static_cast<double>(count_);
    const Eigen::Index dim = s.rows();
    RealMatrix out(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double mean_sq = std::norm(s(i, j) / n);
            const double var = std::max(0.0, sq(i, j) / n - mean_sq);
            out(i, j) = std::sqrt(var / n);
        }
    }
    return out;
}

}  // namespace kelsim
