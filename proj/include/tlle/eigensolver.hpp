#pragma once

// Bottom eigenpairs of a sparse symmetric positive semidefinite matrix,
// restricted to the orthogonal complement of a known null vector.

#include "error.hpp"
#include "random.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace tlle {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct EigenPairs {
    Eigen::VectorXd values;  ///< ascending
    Eigen::MatrixXd vectors; ///< one column per value
    Eigen::Index iterations = 0;
    double max_residual = 0.0; ///< max_j ‖K v_j − λ_j v_j‖
};

struct SubspaceIterationOptions {
    Eigen::Index block_size = 0;   ///< 0 picks max(2 count, count + 8)
    Eigen::Index max_iterations = 3000;
    double shift = 0.0;            ///< factorization uses K + shift * I; must make it nonsingular
    double target_tolerance = 1e-12; ///< stop when residuals reach this times ‖K‖
    double accept_tolerance = 1e-9;  ///< final residual bound (times ‖K‖) required on exit
    std::uint64_t seed = 0x5EEDu;
};

/// Power-iteration estimate of ‖K‖₂ for symmetric K.
inline double estimate_spectral_norm(const SparseMatrix& k, int iterations = 40)
{
    const Eigen::Index n = k.rows();
    if (n == 0)
        return 0.0;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd w = k * v;
        const double norm = w.norm();
        if (norm == 0.0)
            return 0.0;
        estimate = norm;
        v = w / norm;
    }
    return estimate;
}

namespace detail {

inline void project_out(Eigen::MatrixXd& x, const Eigen::VectorXd& unit)
{
    x -= unit * (unit.transpose() * x);
}

inline Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& x)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    return qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
}

/// Rayleigh-Ritz of K on span(q); returns Ritz pairs sorted ascending.
inline EigenPairs rayleigh_ritz(const SparseMatrix& k, const Eigen::MatrixXd& q, Eigen::MatrixXd* kx)
{
    const Eigen::MatrixXd kq = k * q;
    Eigen::MatrixXd t = q.transpose() * kq;
    t = 0.5 * (t + t.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    EigenPairs out;
    out.values = eig.eigenvalues();
    out.vectors = q * eig.eigenvectors();
    if (kx)
        *kx = kq * eig.eigenvectors();
    return out;
}

} // namespace detail

/// Dense route: eigendecomposition of P K P + c u uᵀ with P = I − u uᵀ and c
/// above the spectrum, so the `count` smallest pairs are those of K on u⊥.
inline EigenPairs dense_bottom_eigenpairs(const SparseMatrix& k, const Eigen::VectorXd& null_unit,
                                          Eigen::Index count)
{
    Eigen::MatrixXd dense = Eigen::MatrixXd(k);
    const Eigen::VectorXd ku = dense * null_unit;
    const double uku = null_unit.dot(ku);
    dense -= ku * null_unit.transpose() + null_unit * ku.transpose();
    const double lift = 2.0 * std::max(dense.cwiseAbs().rowwise().sum().maxCoeff(), 1.0);
    dense += (uku + lift) * null_unit * null_unit.transpose();
    dense = 0.5 * (dense + dense.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
    if (eig.info() != Eigen::Success)
        throw NumericError("dense symmetric eigensolver did not converge");

    EigenPairs out;
    out.vectors = eig.eigenvectors().leftCols(count);
    detail::project_out(out.vectors, null_unit);
    out.vectors = detail::orthonormal_columns(out.vectors);
    Eigen::MatrixXd kx;
    // Re-extract Ritz values on the cleaned basis; this also orders them.
    out = detail::rayleigh_ritz(k, out.vectors, &kx);
    out.iterations = 1;
    for (Eigen::Index j = 0; j < count; ++j)
        out.max_residual = std::max(out.max_residual, (kx.col(j) - out.values(j) * out.vectors.col(j)).norm());
    return out;
}

/// Sparse route: block subspace iteration with (K + shift I)^{-1} on u⊥ and
/// Rayleigh-Ritz on K each step. K must satisfy K u ≈ 0 so that u⊥ is
/// invariant.
inline EigenPairs sparse_bottom_eigenpairs(const SparseMatrix& k, const Eigen::VectorXd& null_unit,
                                           Eigen::Index count, const SubspaceIterationOptions& opts,
                                           double norm_k)
{
    const Eigen::Index n = k.rows();
    const Eigen::Index block = std::min<Eigen::Index>(
        n - 1, opts.block_size > 0 ? std::max(opts.block_size, count)
                                   : std::max<Eigen::Index>(2 * count, count + 8));
    if (count > block)
        throw InvalidArgument("requested more eigenpairs than the deflated space holds");

    SparseMatrix shifted = k;
    for (Eigen::Index i = 0; i < n; ++i)
        shifted.coeffRef(i, i) += opts.shift;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success)
        throw NumericError("sparse LDLT factorization of the shifted alignment matrix failed");

    auto engine = make_engine(opts.seed);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd q(n, block);
    for (Eigen::Index j = 0; j < block; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            q(i, j) = gauss(engine);
    detail::project_out(q, null_unit);
    q = detail::orthonormal_columns(q);

    const double target = opts.target_tolerance * norm_k;
    const double accept = opts.accept_tolerance * norm_k;
    EigenPairs ritz;
    Eigen::MatrixXd kx;
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index since_best = 0;
    Eigen::Index it = 0;
    for (; it < opts.max_iterations; ++it) {
        Eigen::MatrixXd z = ldlt.solve(q);
        detail::project_out(z, null_unit);
        q = detail::orthonormal_columns(z);
        ritz = detail::rayleigh_ritz(k, q, &kx);
        double worst = 0.0;
        for (Eigen::Index j = 0; j < count; ++j)
            worst = std::max(worst, (kx.col(j) - ritz.values(j) * ritz.vectors.col(j)).norm());
        ritz.max_residual = worst;
        q = ritz.vectors;
        if (worst <= target)
            break;
        // Residuals stuck at the roundoff floor: accept once they meet the contract.
        if (worst < 0.5 * best) {
            best = worst;
            since_best = 0;
        } else if (++since_best > 50 && worst <= accept) {
            break;
        }
    }
    ritz.iterations = it + 1;
    if (!(ritz.max_residual <= accept)) {
        std::ostringstream msg;
        msg << "subspace iteration did not converge after " << ritz.iterations
            << " iterations (max residual " << ritz.max_residual << ", required " << accept << ")";
        throw NumericError(msg.str());
    }
    ritz.values.conservativeResize(count);
    ritz.vectors.conservativeResize(Eigen::NoChange, count);
    return ritz;
}

} // namespace tlle
