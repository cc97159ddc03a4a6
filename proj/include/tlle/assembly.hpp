#pragma once

// Global alignment matrix K = Σ_i S_i H⁽ⁱ⁾H⁽ⁱ⁾ᵀ S_iᵀ and its bottom
// non-constant eigenvectors.

#include "eigensolver.hpp"
#include "error.hpp"
#include "localfit.hpp"
#include "neighbors.hpp"
#include "parallel.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace tlle {

struct AlignmentMatrix {
    SparseMatrix matrix;
    WeightKind kind = WeightKind::h_weights;
    Index block_columns = 0; ///< m for h-kinds, 1 for LLE

    Index size() const noexcept { return matrix.rows(); }
    double mean_diagonal() const
    {
        return size() > 0 ? matrix.diagonal().sum() / static_cast<double>(size()) : 0.0;
    }
};

/// Global support and local coefficients of the relations contributed by
/// one neighborhood: the contribution to xᵀKx is ‖x[support]ᵀ coeff‖².
/// h-kinds use the neighbors and H⁽ⁱ⁾; LLE uses [i, neighbors] and [1; −w].
struct ScatterBlock {
    std::vector<Index> support;
    Eigen::MatrixXd coeff;
};

inline ScatterBlock scatter_block(Index owner, std::span<const Index> row, const WeightBlock& block)
{
    ScatterBlock out;
    const Index k = static_cast<Index>(row.size());
    if (block.k() != k)
        throw StructuralError("block of point " + std::to_string(owner) + " has " +
                              std::to_string(block.k()) + " rows, expected k = " + std::to_string(k));
    if (block.is_h_kind()) {
        out.support.assign(row.begin(), row.end());
        out.coeff = block.matrix;
    } else {
        out.support.reserve(static_cast<std::size_t>(k + 1));
        out.support.push_back(owner);
        out.support.insert(out.support.end(), row.begin(), row.end());
        out.coeff.resize(k + 1, 1);
        out.coeff(0, 0) = 1.0;
        out.coeff.bottomRows(k) = -block.matrix.col(0);
    }
    return out;
}

inline AlignmentMatrix assemble_alignment(const NeighborhoodIndex& nbrs, std::span<const WeightBlock> blocks)
{
    const Index n = nbrs.size();
    if (static_cast<Index>(blocks.size()) != n)
        throw StructuralError("expected one weight block per point (" + std::to_string(n) + "), got " +
                              std::to_string(blocks.size()));
    if (n == 0)
        throw StructuralError("empty neighborhood index");
    const WeightKind kind = blocks.front().kind;
    const Index cols = blocks.front().columns();
    for (Index i = 0; i < n; ++i) {
        const auto& b = blocks[static_cast<std::size_t>(i)];
        if (b.owner != i)
            throw StructuralError("block " + std::to_string(i) + " belongs to point " + std::to_string(b.owner));
        if (b.kind != kind)
            throw StructuralError("mixed weight kinds in one alignment");
        for (const Index j : nbrs.row(i))
            if (j < 0 || j >= n)
                throw StructuralError("neighbor index " + std::to_string(j) + " out of range");
    }

    // Local products in parallel; triplets are emitted in point order so the
    // summation order, and thus K, is independent of the thread count.
    std::vector<ScatterBlock> scatter(static_cast<std::size_t>(n));
    std::vector<Eigen::MatrixXd> local(static_cast<std::size_t>(n));
    parallel_for(n, [&](Index i) {
        const auto u = static_cast<std::size_t>(i);
        scatter[u] = scatter_block(i, nbrs.row(i), blocks[u]);
        Eigen::MatrixXd c = scatter[u].coeff * scatter[u].coeff.transpose();
        c.triangularView<Eigen::StrictlyLower>() = c.transpose();
        local[u] = std::move(c);
    });

    std::vector<Eigen::Triplet<double>> triplets;
    std::size_t total = 0;
    for (const auto& s : scatter)
        total += s.support.size() * s.support.size();
    triplets.reserve(total);
    for (std::size_t u = 0; u < scatter.size(); ++u) {
        const auto& sup = scatter[u].support;
        for (std::size_t a = 0; a < sup.size(); ++a)
            for (std::size_t b = 0; b < sup.size(); ++b)
                triplets.emplace_back(sup[a], sup[b], local[u](static_cast<Index>(a), static_cast<Index>(b)));
    }
    AlignmentMatrix out;
    out.kind = kind;
    out.block_columns = cols;
    out.matrix.resize(n, n);
    out.matrix.setFromTriplets(triplets.begin(), triplets.end());
    out.matrix.makeCompressed();
    return out;
}

/// Σ_i ‖Y_i H⁽ⁱ⁾‖² for Y given as d x N (rows are coordinate functions).
inline double alignment_objective(const Eigen::MatrixXd& y, const NeighborhoodIndex& nbrs,
                                  std::span<const WeightBlock> blocks)
{
    if (y.cols() != nbrs.size() || static_cast<Index>(blocks.size()) != nbrs.size())
        throw StructuralError("embedding, neighborhoods and blocks disagree on N");
    double total = 0.0;
    for (Index i = 0; i < nbrs.size(); ++i) {
        const auto s = scatter_block(i, nbrs.row(i), blocks[static_cast<std::size_t>(i)]);
        Eigen::MatrixXd yi(y.rows(), static_cast<Index>(s.support.size()));
        for (std::size_t a = 0; a < s.support.size(); ++a)
            yi.col(static_cast<Index>(a)) = y.col(s.support[a]);
        total += (yi * s.coeff).squaredNorm();
    }
    return total;
}

struct SolveOptions {
    enum class Method { automatic, dense, sparse };
    Method method = Method::automatic;
    Index dense_limit = 500;        ///< automatic uses the dense route up to this N
    double null_tol_factor = 1e-12; ///< null tolerance relative to mean(diag K)
    bool allow_degenerate = false;
    double residual_tolerance = 1e-9; ///< ‖Kv − λv‖ <= this * ‖K‖
    double target_tolerance = 1e-12;
    double shift_factor = 1e-11; ///< sparse shift relative to mean(diag K)
    Index block_size = 0;
    Index max_iterations = 3000;
};

/// Output coordinates. `coordinates` is d x N with orthonormal rows that are
/// orthogonal to 1_N.
struct Embedding {
    Eigen::MatrixXd coordinates;
    Eigen::VectorXd eigenvalues;  ///< retained eigenvalues, ascending
    double null_eigenvalue = 0.0; ///< Rayleigh quotient of 1_N / √N
    double null_tolerance = 0.0;
    bool degenerate_null_space = false;
    std::string solver;
    Index iterations = 0;
    double max_residual = 0.0;

    Index dim() const noexcept { return coordinates.rows(); }
    Index size() const noexcept { return coordinates.cols(); }
    /// N x d, one row per point.
    Eigen::MatrixXd points() const { return coordinates.transpose(); }
};

/// Makes the largest-magnitude entry of every column positive (first index on ties).
inline void fix_signs(Eigen::MatrixXd& vectors)
{
    for (Index j = 0; j < vectors.cols(); ++j) {
        Index at = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&at);
        if (vectors(at, j) < 0.0)
            vectors.col(j) = -vectors.col(j);
    }
}

/// Bottom d eigenvectors of K orthogonal to 1_N.
///
/// 1_N must be a null vector of K. If the smallest eigenvalue on 1_N⊥ is
/// below null_tol_factor * mean(diag K), the null space is more than
/// one-dimensional; that raises DegenerateNullSpaceError unless
/// allow_degenerate is set, in which case an orthonormal basis of the
/// bottom of 1_N⊥ is still returned and flagged.
inline Embedding solve_embedding(const AlignmentMatrix& k, Index d, const SolveOptions& opts = {})
{
    const Index n = k.size();
    if (d < 1 || d > n - 1)
        throw InvalidArgument("solve_embedding requires 1 <= d <= N-1 (d = " + std::to_string(d) +
                              ", N = " + std::to_string(n) + ")");
    const double norm_k = std::max(estimate_spectral_norm(k.matrix), std::numeric_limits<double>::min());
    const double mean_diag = k.mean_diagonal();

    Embedding out;
    const Eigen::VectorXd unit = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const Eigen::VectorXd k_unit = k.matrix * unit;
    out.null_eigenvalue = unit.dot(k_unit);
    if (k_unit.norm() > 1e-8 * norm_k)
        throw NumericError("1_N is not a null vector of the alignment matrix (‖K 1̂‖ = " +
                           std::to_string(k_unit.norm()) + ")");
    out.null_tolerance = opts.null_tol_factor * mean_diag;

    const bool dense = opts.method == SolveOptions::Method::dense ||
                       (opts.method == SolveOptions::Method::automatic && n <= opts.dense_limit);
    EigenPairs pairs;
    if (dense) {
        pairs = dense_bottom_eigenpairs(k.matrix, unit, d);
        out.solver = "dense";
    } else {
        SubspaceIterationOptions sub;
        sub.block_size = opts.block_size;
        sub.max_iterations = opts.max_iterations;
        sub.shift = std::max(opts.shift_factor * mean_diag, std::numeric_limits<double>::min());
        sub.target_tolerance = opts.target_tolerance;
        sub.accept_tolerance = opts.residual_tolerance;
        pairs = sparse_bottom_eigenpairs(k.matrix, unit, d, sub, norm_k);
        out.solver = "sparse";
    }
    if (pairs.max_residual > opts.residual_tolerance * norm_k) {
        std::ostringstream msg;
        msg << "eigenpair residual " << pairs.max_residual << " exceeds " << opts.residual_tolerance * norm_k;
        throw NumericError(msg.str());
    }

    out.degenerate_null_space = pairs.values(0) < out.null_tolerance;
    if (out.degenerate_null_space && !opts.allow_degenerate) {
        std::ostringstream msg;
        msg << "alignment matrix has more than one zero eigenvalue (second eigenvalue "
            << pairs.values(0) << " < null tolerance " << out.null_tolerance
            << "); the neighborhood graph may be disconnected or the weights too few: "
               "increase k or m, or check connectivity";
        throw DegenerateNullSpaceError(msg.str());
    }

    fix_signs(pairs.vectors);
    out.coordinates = pairs.vectors.transpose();
    out.eigenvalues = pairs.values;
    out.iterations = pairs.iterations;
    out.max_residual = pairs.max_residual;
    return out;
}

} // namespace tlle
