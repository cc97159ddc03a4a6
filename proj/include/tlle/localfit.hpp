#pragma once

// Per-neighborhood linear algebra: centered SVD of the neighbor matrix,
// intrinsic-dimension votes, and the three weight constructions
// (tangential h-weights, Hessian estimators, LLE reconstruction weights).

#include "error.hpp"
#include "neighbors.hpp"
#include "parallel.hpp"
#include "point_cloud.hpp"
#include "random.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tlle {

/// SVD of M = [x_{i_1} - x̄, ..., x_{i_k} - x̄] for one neighborhood.
struct LocalSpectrum {
    Index owner = 0;
    Eigen::VectorXd mean;            ///< x̄, length D
    Eigen::VectorXd singular_values; ///< length min(D, k), non-increasing
    Eigen::MatrixXd right_vectors;   ///< V, k x k orthogonal
    Eigen::MatrixXd left_vectors;    ///< thin U, D x min(D, k)

    Index k() const noexcept { return right_vectors.rows(); }

    /// σ_j if j < min(D, k), else 0.
    double sigma(Index j) const noexcept
    {
        return j < singular_values.size() ? singular_values(j) : 0.0;
    }

    /// Coordinates of the neighbors in the `dim`-dimensional principal plane
    /// through the mean: row j is σ_j v_jᵀ (dim x k).
    Eigen::MatrixXd tangential_coordinates(Index dim) const
    {
        Eigen::MatrixXd coords(dim, k());
        for (Index j = 0; j < dim; ++j)
            coords.row(j) = sigma(j) * right_vectors.col(j).transpose();
        return coords;
    }
};

/// Gathers the neighbor matrix M (D x k), columns centered on their mean.
inline Eigen::MatrixXd centered_neighbors(const Eigen::MatrixXd& points, std::span<const Index> row,
                                          Eigen::VectorXd* mean_out = nullptr)
{
    const Index k = static_cast<Index>(row.size());
    Eigen::MatrixXd m(points.cols(), k);
    for (Index a = 0; a < k; ++a)
        m.col(a) = points.row(row[static_cast<std::size_t>(a)]).transpose();
    const Eigen::VectorXd mean = m.rowwise().mean();
    m.colwise() -= mean;
    if (mean_out)
        *mean_out = mean;
    return m;
}

inline LocalSpectrum center_and_svd(const Eigen::MatrixXd& points, std::span<const Index> row,
                                    Index owner = 0)
{
    if (row.empty())
        throw InvalidArgument("neighborhood must contain at least one index");
    LocalSpectrum spec;
    spec.owner = owner;
    const Eigen::MatrixXd m = centered_neighbors(points, row, &spec.mean);
    if (!m.allFinite())
        throw NumericError("non-finite coordinates in neighborhood of point " + std::to_string(owner));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeFullV);
    spec.singular_values = svd.singularValues();
    spec.right_vectors = svd.matrixV();
    spec.left_vectors = svd.matrixU();
    return spec;
}

inline std::vector<LocalSpectrum> local_spectra(const Eigen::MatrixXd& points,
                                                const NeighborhoodIndex& nbrs)
{
    std::vector<LocalSpectrum> out(static_cast<std::size_t>(nbrs.size()));
    parallel_for(nbrs.size(), [&](Index i) {
        out[static_cast<std::size_t>(i)] = center_and_svd(points, nbrs.row(i), i);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Intrinsic dimension

/// Number of σ_j with σ_j >= ratio_threshold * σ_1.
inline Index count_significant(const Eigen::VectorXd& singular_values, double ratio_threshold)
{
    if (singular_values.size() == 0 || singular_values(0) <= 0.0)
        return 0;
    const double cut = ratio_threshold * singular_values(0);
    Index count = 0;
    for (Index j = 0; j < singular_values.size(); ++j)
        if (singular_values(j) >= cut)
            ++count;
    return count;
}

struct DimensionEstimate {
    Index dimension = 0;
    std::map<Index, Index> histogram; ///< local estimate -> number of neighborhoods
    std::vector<Index> excluded;      ///< owners of neighborhoods with σ_1 = 0
};

/// Majority vote of per-neighborhood significant-singular-value counts. Ties
/// go to the smaller dimension.
inline DimensionEstimate estimate_intrinsic_dim(std::span<const LocalSpectrum> spectra,
                                                double ratio_threshold)
{
    if (spectra.empty())
        throw InvalidArgument("estimate_intrinsic_dim needs at least one neighborhood");
    if (!(ratio_threshold > 0.0 && ratio_threshold < 1.0))
        throw InvalidArgument("ratio_threshold must lie in (0, 1)");
    DimensionEstimate est;
    for (const auto& s : spectra) {
        if (s.singular_values.size() == 0 || !(s.singular_values(0) > 0.0)) {
            est.excluded.push_back(s.owner);
            continue;
        }
        ++est.histogram[count_significant(s.singular_values, ratio_threshold)];
    }
    if (est.histogram.empty())
        throw NumericError("all neighborhoods are degenerate (sigma_1 = 0); cannot estimate dimension");
    Index best_votes = -1;
    for (const auto& [dim, votes] : est.histogram) {
        if (votes > best_votes) {
            best_votes = votes;
            est.dimension = dim;
        }
    }
    return est;
}

// ---------------------------------------------------------------------------
// Weight blocks

enum class WeightKind { h_weights, hessian_estimator, w_weight };

inline const char* to_string(WeightKind kind) noexcept
{
    switch (kind) {
    case WeightKind::h_weights: return "h_weights";
    case WeightKind::hessian_estimator: return "hessian_estimator";
    case WeightKind::w_weight: return "w_weight";
    }
    return "unknown";
}

/// Weights attached to the neighborhood of `owner`. For h-kinds, `matrix`
/// is k x m with orthonormal columns orthogonal to 1_k and to the leading
/// right singular vectors. For w_weight it is the k x 1 LLE vector summing
/// to one, and `residual` is ‖x_i - Σ w_j x_{i_j}‖.
struct WeightBlock {
    WeightKind kind = WeightKind::h_weights;
    Index owner = 0;
    Eigen::MatrixXd matrix;
    double residual = 0.0;

    Index k() const noexcept { return matrix.rows(); }
    Index columns() const noexcept { return matrix.cols(); }
    bool is_h_kind() const noexcept { return kind != WeightKind::w_weight; }
};

/// Relative size under which a Gram-Schmidt residual counts as dependent.
inline constexpr double dependence_tolerance = 1e-8;
/// σ_j <= rank_tolerance * σ_1 counts as a zero singular value.
inline constexpr double rank_tolerance = 1e-10;

namespace detail {

/// Orthogonalizes v against the first `count` columns of q with two passes
/// of classical Gram-Schmidt. Returns ‖residual‖ / ‖v_original‖ and leaves the
/// (unnormalized) residual in v.
inline double orthogonalize(const Eigen::MatrixXd& q, Index count, Eigen::VectorXd& v)
{
    const double original = v.norm();
    if (original == 0.0)
        return 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        if (count > 0)
            v -= q.leftCols(count) * (q.leftCols(count).transpose() * v);
    }
    return v.norm() / original;
}

inline void require_tangent_rank(const LocalSpectrum& spectrum, Index dim)
{
    if (dim > spectrum.singular_values.size() || spectrum.sigma(0) <= 0.0 ||
        spectrum.sigma(dim - 1) <= rank_tolerance * spectrum.sigma(0))
        throw RankDeficiencyError(static_cast<std::size_t>(spectrum.owner),
                                  "singular value " + std::to_string(dim) +
                                      " of the neighborhood is numerically zero");
}

/// Orthonormal basis of [1_k, v_1, ..., v_dim] with room for `extra` columns.
inline Eigen::MatrixXd tangent_basis(const LocalSpectrum& spectrum, Index dim, Index extra)
{
    const Index k = spectrum.k();
    Eigen::MatrixXd q(k, 1 + dim + extra);
    for (Index c = 0; c <= dim; ++c) {
        Eigen::VectorXd v = c == 0 ? Eigen::VectorXd::Ones(k) : Eigen::VectorXd(spectrum.right_vectors.col(c - 1));
        if (orthogonalize(q, c, v) < dependence_tolerance)
            throw RankDeficiencyError(static_cast<std::size_t>(spectrum.owner),
                                      "right singular vectors are not independent of 1_k");
        q.col(c) = v.normalized();
    }
    return q;
}

} // namespace detail

/// Tangential h-weights: Gram-Schmidt over [1_k, v_1..v_{d_M}, r_1..r_m]
/// with Gaussian r_j drawn from the stream (rng_seed, owner); the last m
/// columns are returned. A dependent r_j is redrawn from stream
/// (rng_seed + attempt, owner), at most 16 times.
inline WeightBlock tlle_weights(const LocalSpectrum& spectrum, Index d_manifold, Index m,
                                std::uint64_t rng_seed)
{
    const Index k = spectrum.k();
    if (d_manifold < 1)
        throw InvalidArgument("d_M must be >= 1");
    if (k < d_manifold + 2)
        throw InvalidArgument("tlle requires k >= d_M + 2 (k = " + std::to_string(k) + ")");
    if (m < 1 || m > k - d_manifold - 1)
        throw InvalidArgument("tlle requires 1 <= m <= k - d_M - 1 = " +
                              std::to_string(k - d_manifold - 1) + " (m = " + std::to_string(m) + ")");
    detail::require_tangent_rank(spectrum, d_manifold);

    Eigen::MatrixXd q = detail::tangent_basis(spectrum, d_manifold, m);
    const auto stream = static_cast<std::uint64_t>(spectrum.owner);
    auto engine = make_engine(rng_seed, stream);
    std::normal_distribution<double> gauss;
    constexpr int max_redraws = 16;
    for (Index j = 0; j < m; ++j) {
        const Index c = 1 + d_manifold + j;
        Eigen::VectorXd r(k);
        for (Index a = 0; a < k; ++a)
            r(a) = gauss(engine);
        int attempt = 0;
        while (detail::orthogonalize(q, c, r) < dependence_tolerance) {
            if (++attempt > max_redraws)
                throw RankDeficiencyError(static_cast<std::size_t>(spectrum.owner),
                                          "random vectors stayed dependent after 16 redraws");
            auto redraw = make_engine(rng_seed + static_cast<std::uint64_t>(attempt), stream);
            for (Index a = 0; a < k; ++a)
                r(a) = gauss(redraw);
        }
        q.col(c) = r.normalized();
    }
    return WeightBlock{WeightKind::h_weights, spectrum.owner, q.rightCols(m), 0.0};
}

/// Columns v_s ∘ v_t for 1 <= s <= t <= d in lexicographic (s, t) order.
inline Eigen::MatrixXd boxtimes(const Eigen::MatrixXd& v)
{
    const Index d = v.cols();
    Eigen::MatrixXd out(v.rows(), d * (d + 1) / 2);
    Index c = 0;
    for (Index s = 0; s < d; ++s)
        for (Index t = s; t < d; ++t)
            out.col(c++) = v.col(s).cwiseProduct(v.col(t));
    return out;
}

/// Hessian estimator of HLLE: Gram-Schmidt over [1_k, V_d, V_d ⊠ V_d],
/// returning the last d(d+1)/2 columns.
inline WeightBlock hlle_weights(const LocalSpectrum& spectrum, Index d)
{
    const Index k = spectrum.k();
    if (d < 1)
        throw InvalidArgument("d must be >= 1");
    const Index extra = d * (d + 1) / 2;
    if (k < 1 + d + extra)
        throw InvalidArgument("hlle requires k >= 1 + d + d(d+1)/2 = " + std::to_string(1 + d + extra) +
                              " (k = " + std::to_string(k) + ")");
    detail::require_tangent_rank(spectrum, d);

    Eigen::MatrixXd q = detail::tangent_basis(spectrum, d, extra);
    const Eigen::MatrixXd products = boxtimes(spectrum.right_vectors.leftCols(d));
    for (Index j = 0; j < extra; ++j) {
        Eigen::VectorXd v = products.col(j);
        if (detail::orthogonalize(q, 1 + d + j, v) < dependence_tolerance)
            throw RankDeficiencyError(static_cast<std::size_t>(spectrum.owner),
                                      "Hessian column " + std::to_string(j) +
                                          " lies in the span of its predecessors");
        q.col(1 + d + j) = v.normalized();
    }
    return WeightBlock{WeightKind::hessian_estimator, spectrum.owner, q.rightCols(extra), 0.0};
}

/// LLE reconstruction weights: argmin ‖x_i - Σ w_j x_{i_j}‖² s.t. Σ w_j = 1,
/// through the local Gram matrix regularized by reg * trace / k.
inline WeightBlock lle_weights(const Eigen::MatrixXd& points, Index i, std::span<const Index> row,
                               double reg = 1e-3)
{
    const Index k = static_cast<Index>(row.size());
    if (k < 1)
        throw InvalidArgument("lle requires k >= 1");
    if (!(reg >= 0.0))
        throw InvalidArgument("reg must be >= 0");

    Eigen::MatrixXd z(points.cols(), k);
    for (Index a = 0; a < k; ++a)
        z.col(a) = (points.row(i) - points.row(row[static_cast<std::size_t>(a)])).transpose();
    Eigen::MatrixXd gram = z.transpose() * z;
    const double trace = gram.trace();
    gram.diagonal().array() += reg * trace / static_cast<double>(k);

    Eigen::VectorXd w;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const Eigen::MatrixXd& basis = eig.eigenvectors();
    const double lambda_max = lambda(k - 1);
    const double zero_cut = 1e-12 * std::max(lambda_max, 0.0);
    if (lambda_max <= 0.0) {
        // every neighbor coincides with x_i
        w = ones / static_cast<double>(k);
    } else if (lambda(0) > zero_cut) {
        w = basis * (basis.transpose() * ones).cwiseQuotient(lambda);
        w /= w.sum();
    } else {
        // Exact representations exist: take the minimum-norm one from the null space.
        Index nulls = 0;
        while (nulls < k && lambda(nulls) <= zero_cut)
            ++nulls;
        w = basis.leftCols(nulls) * (basis.leftCols(nulls).transpose() * ones);
        const double total = w.sum();
        if (!(std::abs(total) > 1e-8))
            throw NumericError("singular local Gram system at point " + std::to_string(i) +
                               "; increase reg");
        w /= total;
    }
    if (!w.allFinite())
        throw NumericError("non-finite LLE weights at point " + std::to_string(i) + "; increase reg");

    WeightBlock block{WeightKind::w_weight, i, w, 0.0};
    block.residual = (z * w).norm();
    return block;
}

struct LleRelation {
    Index pivot = 0;           ///< local position of the pivot neighbor
    Eigen::VectorXd weights;   ///< w̃_l = -h_l / h_pivot for l != pivot, in order
};

/// Rewrites an h-weight column as an LLE-type relation centered on the
/// neighbor with the largest |h_j|.
inline LleRelation hweight_to_wweight(const WeightBlock& block, Index column)
{
    if (!block.is_h_kind())
        throw InvalidArgument("hweight_to_wweight expects an h-kind block");
    if (column < 0 || column >= block.columns())
        throw InvalidArgument("column out of range");
    const Eigen::VectorXd h = block.matrix.col(column);
    Index pivot = 0;
    const double peak = h.cwiseAbs().maxCoeff(&pivot);
    if (!(peak > 0.0))
        throw InvalidArgument("h-weight column is identically zero");
    LleRelation rel;
    rel.pivot = pivot;
    rel.weights.resize(h.size() - 1);
    for (Index l = 0, out = 0; l < h.size(); ++l)
        if (l != pivot)
            rel.weights(out++) = -h(l) / h(pivot);
    return rel;
}

// ---------------------------------------------------------------------------
// Sweeps over all neighborhoods

inline std::vector<WeightBlock> tlle_blocks(std::span<const LocalSpectrum> spectra, Index d_manifold,
                                            Index m, std::uint64_t seed)
{
    std::vector<WeightBlock> out(spectra.size());
    parallel_for(static_cast<Index>(spectra.size()), [&](Index i) {
        out[static_cast<std::size_t>(i)] = tlle_weights(spectra[static_cast<std::size_t>(i)], d_manifold, m, seed);
    });
    return out;
}

inline std::vector<WeightBlock> hlle_blocks(std::span<const LocalSpectrum> spectra, Index d)
{
    std::vector<WeightBlock> out(spectra.size());
    parallel_for(static_cast<Index>(spectra.size()), [&](Index i) {
        out[static_cast<std::size_t>(i)] = hlle_weights(spectra[static_cast<std::size_t>(i)], d);
    });
    return out;
}

inline std::vector<WeightBlock> lle_blocks(const Eigen::MatrixXd& points, const NeighborhoodIndex& nbrs,
                                           double reg)
{
    std::vector<WeightBlock> out(static_cast<std::size_t>(nbrs.size()));
    parallel_for(nbrs.size(), [&](Index i) {
        out[static_cast<std::size_t>(i)] = lle_weights(points, i, nbrs.row(i), reg);
    });
    return out;
}

} // namespace tlle
