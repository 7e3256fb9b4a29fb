#include "tcache/linalg.hpp"

#include <cmath>
#include <random>
#include <string>

namespace tcache {

namespace {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw std::domain_error(std::string(what) + ": matrix has non-finite entries");
}

void fix_signs(SvdTriplet& t) {
    for (Eigen::Index j = 0; j < t.u.cols(); ++j) {
        Eigen::Index arg = 0;
        t.u.col(j).cwiseAbs().maxCoeff(&arg);
        if (t.u(arg, j) < 0.0) {
            t.u.col(j) *= -1.0;
            t.v.col(j) *= -1.0;
        }
    }
}

SvdTriplet dense_svd(const Matrix& m, Eigen::Index r) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU().leftCols(r), svd.singularValues().head(r), svd.matrixV().leftCols(r)};
}

Matrix orthonormalize(const Matrix& y) {
    Eigen::HouseholderQR<Matrix> qr(y);
    return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

// Randomized subspace iteration: range finder on a Gaussian sketch, refined by
// alternating products with m and m^T until the top-r sigma settle.
SvdTriplet subspace_svd(const Matrix& m, Eigen::Index r, std::uint64_t seed, const SvdOptions& opts) {
    const Eigen::Index block = std::min<Eigen::Index>(r + opts.oversample, std::min(m.rows(), m.cols()));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix omega(m.cols(), block);
    for (Eigen::Index j = 0; j < omega.cols(); ++j)
        for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = gauss(rng);

    Matrix q = orthonormalize(m * omega);
    Vector previous = Vector::Zero(r);
    Eigen::BDCSVD<Matrix> small;
    for (int it = 0; it < opts.max_iterations; ++it) {
        Matrix b = q.transpose() * m;  // block x cols
        small.compute(b.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
        Vector current = small.singularValues().head(r);
        const double scale = std::max(current(0), 1e-300);
        if (it > 0 && (current - previous).cwiseAbs().maxCoeff() / scale < opts.tolerance) break;
        previous = current;
        Matrix z = orthonormalize(b.transpose());
        q = orthonormalize(m * z);
    }
    Matrix b = q.transpose() * m;
    small.compute(b.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    // b^T = W S Z^T  =>  m ~= q b = (q Z) S W^T
    return {q * small.matrixV().leftCols(r), small.singularValues().head(r), small.matrixU().leftCols(r)};
}

}  // namespace

SvdTriplet truncated_svd(const Matrix& m, Eigen::Index r, std::uint64_t seed, const SvdOptions& opts) {
    const Eigen::Index limit = std::min(m.rows(), m.cols());
    if (r < 1 || r > limit) {
        throw std::out_of_range("truncated_svd: rank " + std::to_string(r) + " outside 1.." + std::to_string(limit));
    }
    require_finite(m, "truncated_svd");
    SvdTriplet t = limit <= opts.dense_limit ? dense_svd(m, r) : subspace_svd(m, r, seed, opts);
    fix_signs(t);
    return t;
}

double dominant_sigma(const Matrix& m) {
    if (m.size() == 0) throw std::invalid_argument("dominant_sigma: empty matrix");
    require_finite(m, "dominant_sigma");
    const Eigen::Index small = std::min(m.rows(), m.cols());
    if (small > 512) return truncated_svd(m, 1, 0).sigma(0);
    // Gram matrix on the short side; its top eigenvalue is sigma_max^2.
    Matrix gram = Matrix::Zero(small, small);
    if (m.rows() <= m.cols())
        gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
    else
        gram.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

}  // namespace tcache
