#include "kelsim/linalg.hpp"

#include "kelsim/tolerances.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <stdexcept>

namespace kelsim {

double max_abs(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

double hermiticity_defect(const ComplexMatrix& m) {
    return max_abs(m - m.adjoint());
}

bool is_hermitian(const ComplexMatrix& m, double rel_tol) {
    const double scale = std::max(max_abs(m), 1.0);
    return hermiticity_defect(m) <= rel_tol * scale;
}

bool all_finite(const ComplexMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const Complex& v = m(i, j);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        }
    }
    return true;
}

namespace {

void require_square_same(const ComplexMatrix& a, const ComplexMatrix& b, const char* who) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw std::invalid_argument(std::string(who) + ": operands must be square with equal dims");
    }
}

}  // namespace

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_square_same(a, b, "commutator");
    return a * b - b * a;
}

ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_square_same(a, b, "anticommutator");
    return a * b + b * a;
}

namespace {

// Diagonal Padé approximant of order m for exp. Returns the (num, den) pair
// U, V with exp(A) ≈ (V − U)⁻¹(V + U).
void pade_uv(const ComplexMatrix& a, int m, ComplexMatrix& u, ComplexMatrix& v) {
    const Eigen::Index n = a.rows();
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    const ComplexMatrix a2 = a * a;

    if (m == 3) {
        static constexpr std::array<double, 4> b{120., 60., 12., 1.};
        u = a * (b[3] * a2 + b[1] * id);
        v = b[2] * a2 + b[0] * id;
        return;
    }
    const ComplexMatrix a4 = a2 * a2;
    if (m == 5) {
        static constexpr std::array<double, 6> b{30240., 15120., 3360., 420., 30., 1.};
        u = a * (b[5] * a4 + b[3] * a2 + b[1] * id);
        v = b[4] * a4 + b[2] * a2 + b[0] * id;
        return;
    }
    const ComplexMatrix a6 = a4 * a2;
    if (m == 7) {
        static constexpr std::array<double, 8> b{17297280., 8648640., 1995840., 277200.,
                                                 25200.,    1512.,    56.,      1.};
        u = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
        v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
        return;
    }
    if (m == 9) {
        static constexpr std::array<double, 10> b{17643225600., 8821612800., 2075673600.,
                                                  302702400.,   30270240.,   2162160.,
                                                  110880.,      3960.,       90.,
                                                  1.};
        const ComplexMatrix a8 = a6 * a2;
        u = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
        v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
        return;
    }
    // m == 13
    static constexpr std::array<double, 14> b{
        64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
        129060195264000.,   10559470521600.,    670442572800.,     33522128640.,
        1323241920.,        40840800.,          960960.,           16380.,
        182.,               1.};
    u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
             b[3] * a2 + b[1] * id);
    v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
        b[0] * id;
}

}  // namespace

ComplexMatrix matrix_exponential(const ComplexMatrix& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("matrix_exponential: input must be square");
    }
    const Eigen::Index n = a.rows();
    if (n == 0) return a;

    // 1-norm thresholds for orders 3, 5, 7, 9, 13 (squaring kicks in past the last).
    static constexpr std::array<double, 5> theta{1.495585217958292e-2, 2.539398330063230e-1,
                                                 9.504178996162932e-1, 2.097847961257068,
                                                 5.371920351148152};
    static constexpr std::array<int, 5> order{3, 5, 7, 9, 13};

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();

    ComplexMatrix scaled = a;
    int squarings = 0;
    int m = 13;
    if (norm1 <= theta[3]) {
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (norm1 <= theta[k]) {
                m = order[k];
                break;
            }
        }
    } else if (norm1 > theta[4]) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta[4])));
        scaled /= std::pow(2.0, squarings);
    }

    ComplexMatrix u, v;
    pade_uv(scaled, m, u, v);
    ComplexMatrix result = (v - u).partialPivLu().solve(v + u);
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& joint, const std::vector<int>& dims,
                            int keep) {
    if (joint.rows() != joint.cols()) {
        throw std::invalid_argument("partial_trace: joint matrix must be square");
    }
    if (keep < 0 || keep >= static_cast<int>(dims.size())) {
        throw std::invalid_argument("partial_trace: keep index out of range");
    }
    long total = 1;
    for (int d : dims) {
        if (d <= 0) throw std::invalid_argument("partial_trace: dims must be positive");
        total *= d;
    }
    if (total != joint.rows()) {
        throw std::invalid_argument("partial_trace: product of dims must equal joint dim");
    }

    // Row-major strides matching kron's index convention.
    std::vector<long> stride(dims.size(), 1);
    for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) {
        stride[k] = stride[k + 1] * dims[k + 1];
    }

    const int d_keep = dims[keep];
    const long s_keep = stride[keep];

    // Base offsets of every joint index whose kept component is zero.
    std::vector<long> offsets;
    offsets.reserve(total / d_keep);
    for (long idx = 0; idx < total; ++idx) {
        if ((idx / s_keep) % d_keep == 0) offsets.push_back(idx);
    }

    ComplexMatrix out = ComplexMatrix::Zero(d_keep, d_keep);
    for (long off : offsets) {
        for (int a = 0; a < d_keep; ++a) {
            for (int b = 0; b < d_keep; ++b) {
                out(a, b) += joint(off + a * s_keep, off + b * s_keep);
            }
        }
    }
    return out;
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
        throw std::invalid_argument("trace_distance: operands must be square with equal dims");
    }
    const ComplexMatrix diff = a - b;
    const double scale = std::max(1.0, max_abs(diff));
    if (hermiticity_defect(diff) > tol::trace_distance_hermitian * scale) {
        throw std::invalid_argument("trace_distance: difference is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (diff + diff.adjoint()),
                                                    Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

void DensityOperator::validate() const {
    if (matrix.rows() != matrix.cols()) {
        throw std::invalid_argument("DensityOperator: matrix must be square");
    }
    if (!all_finite(matrix)) {
        throw std::invalid_argument("DensityOperator: non-finite entries");
    }
    if (std::abs(matrix.trace() - Complex(1.0, 0.0)) > tol::density_trace) {
        throw std::invalid_argument("DensityOperator: trace differs from 1");
    }
    if (hermiticity_defect(matrix) > tol::density_hermitian) {
        throw std::invalid_argument("DensityOperator: not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (matrix + matrix.adjoint()),
                                                    Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < tol::density_min_eig) {
        throw std::invalid_argument("DensityOperator: negative eigenvalue beyond tolerance");
    }
}

ComplexMatrix pauli_x() {
    ComplexMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

ComplexMatrix pauli_y() {
    ComplexMatrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

ComplexMatrix pauli_z() {
    ComplexMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

}  // namespace kelsim
