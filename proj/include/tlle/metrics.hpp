#pragma once

// Embedding quality measures.

#include "assembly.hpp"
#include "error.hpp"
#include "neighbors.hpp"
#include "point_cloud.hpp"

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tlle {

/// The alignment objective Σ_i ‖Y_i H⁽ⁱ⁾‖² evaluated at the embedding.
inline double relation_residual(const Embedding& y, const NeighborhoodIndex& nbrs,
                                std::span<const WeightBlock> blocks)
{
    return alignment_objective(y.coordinates, nbrs, blocks);
}

/// R² of the best affine fit Y ≈ X A + b, computed after whitening Y (so it
/// is the mean squared canonical correlation and does not change under any
/// invertible affine map of Y). For an embedding with YYᵀ = I and zero mean
/// the whitening is a rotation and this is the plain R². Values near 1 mean
/// the embedding is essentially a linear projection of the input.
inline double affine_projection_score(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y)
{
    const Index n = x.rows();
    if (y.rows() != n)
        throw InvalidArgument("affine_projection_score: X and Y disagree on N");
    if (n < x.cols() + 1)
        throw InvalidArgument("affine fit is ill-posed: N < D + 1");
    const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(yc, Eigen::ComputeThinU);
    const Eigen::VectorXd& sv = svd.singularValues();
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-12 * sv(0))
        ++rank;
    if (rank == 0)
        return 1.0;
    const Eigen::MatrixXd white = svd.matrixU().leftCols(rank);

    Eigen::MatrixXd design(n, x.cols() + 1);
    design.leftCols(x.cols()) = x;
    design.col(x.cols()).setOnes();
    const Eigen::MatrixXd coef = design.completeOrthogonalDecomposition().solve(white);
    const double resid = (white - design * coef).squaredNorm();
    return std::clamp(1.0 - resid / static_cast<double>(rank), 0.0, 1.0);
}

inline double affine_projection_score(const PointCloud& x, const Embedding& y)
{
    return affine_projection_score(x.points, y.points());
}

/// Mean fraction of each point's k_eval nearest neighbors in X that are also
/// among its k_eval nearest neighbors in Y.
inline double neighborhood_preservation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Index k_eval)
{
    if (x.rows() != y.rows())
        throw InvalidArgument("neighborhood_preservation: X and Y disagree on N");
    const NeighborhoodIndex nx = knn(x, k_eval);
    const NeighborhoodIndex ny = knn(y, k_eval);
    double total = 0.0;
    std::vector<Index> a(static_cast<std::size_t>(k_eval));
    std::vector<Index> b(static_cast<std::size_t>(k_eval));
    std::vector<Index> common;
    for (Index i = 0; i < x.rows(); ++i) {
        a.assign(nx.row(i).begin(), nx.row(i).end());
        b.assign(ny.row(i).begin(), ny.row(i).end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        common.clear();
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
        total += static_cast<double>(common.size()) / static_cast<double>(k_eval);
    }
    return total / static_cast<double>(x.rows());
}

/// min over s > 0, orthogonal Q, t of ‖s Y Q + t − G‖ / ‖G − mean(G)‖.
inline double procrustes_error(const Eigen::MatrixXd& y, const Eigen::MatrixXd& g)
{
    if (y.rows() != g.rows())
        throw InvalidArgument("procrustes_error: point counts differ");
    if (y.cols() != g.cols())
        throw InvalidArgument("procrustes_error: dimension mismatch (" + std::to_string(y.cols()) +
                              " vs " + std::to_string(g.cols()) + ")");
    const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
    const Eigen::MatrixXd gc = g.rowwise() - g.colwise().mean();
    const double gg = gc.squaredNorm();
    const double yy = yc.squaredNorm();
    if (gg == 0.0)
        throw InvalidArgument("procrustes_error: reference cloud is a single point");
    if (yy == 0.0)
        return 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(yc.transpose() * gc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double trace = svd.singularValues().sum();
    const double scale = trace / yy;
    const Eigen::MatrixXd rotation = svd.matrixU() * svd.matrixV().transpose();
    return (scale * yc * rotation - gc).norm() / std::sqrt(gg);
}

namespace detail {

inline double orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c)
{
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

inline bool within_box(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p)
{
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

inline bool segments_intersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                               const Eigen::Vector2d& d, double eps)
{
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    const auto sign = [eps](double v) { return v > eps ? 1 : (v < -eps ? -1 : 0); };
    const int s1 = sign(o1), s2 = sign(o2), s3 = sign(o3), s4 = sign(o4);
    if (s1 * s2 < 0 && s3 * s4 < 0)
        return true;
    if (s1 == 0 && within_box(a, b, c))
        return true;
    if (s2 == 0 && within_box(a, b, d))
        return true;
    if (s3 == 0 && within_box(c, d, a))
        return true;
    if (s4 == 0 && within_box(c, d, b))
        return true;
    return false;
}

inline double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (a + t * ab - p).norm();
}

inline double segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                               const Eigen::Vector2d& d)
{
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

} // namespace detail

/// Orders the points of a 2-D embedding of a closed curve by their curve
/// parameter and reports whether the closed polyline crosses itself.
/// Adjacent segments are skipped. With tube_radius_factor > 0, two segments
/// closer than tube = tube_radius_factor * median segment length also count
/// as crossing, provided they lie more than 4 tube apart along the curve
/// (nearby pieces of a smooth curve are always that close).
inline bool self_intersection_check(const Eigen::MatrixXd& y, const Eigen::VectorXd& theta,
                                    double tube_radius_factor = 0.0)
{
    const Index n = y.rows();
    if (y.cols() != 2)
        throw InvalidArgument("self_intersection_check requires a 2-D embedding");
    if (theta.size() != n)
        throw InvalidArgument("self_intersection_check requires one curve parameter per point");
    if (n < 10)
        throw InvalidArgument("self_intersection_check requires N >= 10");

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return theta(a) < theta(b); });
    std::vector<Eigen::Vector2d> p(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        p[static_cast<std::size_t>(i)] = y.row(order[static_cast<std::size_t>(i)]).transpose();

    const Eigen::Vector2d lo = y.colwise().minCoeff().transpose();
    const Eigen::Vector2d hi = y.colwise().maxCoeff().transpose();
    const double eps = 1e-12 * std::max((hi - lo).squaredNorm(), std::numeric_limits<double>::min());

    const auto at = [&](Index i) -> const Eigen::Vector2d& { return p[static_cast<std::size_t>(i % n)]; };
    double tube = 0.0;
    std::vector<double> start(static_cast<std::size_t>(n + 1), 0.0); // arc length at vertex i
    if (tube_radius_factor > 0.0) {
        std::vector<double> lengths(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            lengths[static_cast<std::size_t>(i)] = (at(i + 1) - at(i)).norm();
            start[static_cast<std::size_t>(i + 1)] = start[static_cast<std::size_t>(i)] + lengths[static_cast<std::size_t>(i)];
        }
        std::nth_element(lengths.begin(), lengths.begin() + n / 2, lengths.end());
        tube = tube_radius_factor * lengths[static_cast<std::size_t>(n / 2)];
    }
    const double perimeter = start.back();

    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1)
                continue;
            if (detail::segments_intersect(at(i), at(i + 1), at(j), at(j + 1), eps))
                return true;
            if (tube > 0.0) {
                const double gap = start[static_cast<std::size_t>(j)] - start[static_cast<std::size_t>(i + 1)];
                const double wrap = perimeter - start[static_cast<std::size_t>(j + 1)] + start[static_cast<std::size_t>(i)];
                if (std::min(gap, wrap) > 4.0 * tube &&
                    detail::segment_distance(at(i), at(i + 1), at(j), at(j + 1)) < tube)
                    return true;
            }
        }
    }
    return false;
}

struct EvalReport {
    double relation_residual = 0.0;
    double affine_projection_score = 0.0;
    double neighborhood_preservation = 0.0;
    Index k_eval = 0;
    std::optional<double> procrustes_error;
    std::optional<bool> self_intersection;

    nlohmann::json to_json() const
    {
        nlohmann::json j{{"relation_residual", relation_residual},
                         {"affine_projection_score", affine_projection_score},
                         {"neighborhood_preservation", neighborhood_preservation},
                         {"parameters", {{"k_eval", k_eval}}}};
        j["procrustes_error"] = procrustes_error ? nlohmann::json(*procrustes_error) : nlohmann::json(nullptr);
        j["self_intersection"] = self_intersection ? nlohmann::json(*self_intersection) : nlohmann::json(nullptr);
        return j;
    }

    static std::string csv_header()
    {
        return "relation_residual,affine_projection_score,neighborhood_preservation,k_eval,"
               "procrustes_error,self_intersection";
    }

    std::string csv_row() const
    {
        nlohmann::json j = to_json();
        std::string out = j["relation_residual"].dump() + "," + j["affine_projection_score"].dump() + "," +
                          j["neighborhood_preservation"].dump() + "," + std::to_string(k_eval) + ",";
        out += procrustes_error ? j["procrustes_error"].dump() : std::string{};
        out += ",";
        if (self_intersection)
            out += *self_intersection ? "true" : "false";
        return out;
    }
};

/// Computes every metric that applies: Procrustes needs ground truth with p = d;
/// the self-intersection test needs a 1-parameter (curve) ground truth and d = 2.
inline EvalReport evaluate(const PointCloud& cloud, const Embedding& y, const NeighborhoodIndex& nbrs,
                           std::span<const WeightBlock> blocks, Index k_eval)
{
    EvalReport r;
    r.k_eval = k_eval;
    const Eigen::MatrixXd pts = y.points();
    r.relation_residual = relation_residual(y, nbrs, blocks);
    r.affine_projection_score = affine_projection_score(cloud.points, pts);
    r.neighborhood_preservation = neighborhood_preservation(cloud.points, pts, k_eval);
    if (cloud.ground_truth) {
        if (cloud.ground_truth->cols() == y.dim())
            r.procrustes_error = procrustes_error(pts, *cloud.ground_truth);
        if (cloud.ground_truth->cols() == 1 && y.dim() == 2 && y.size() >= 10)
            r.self_intersection = self_intersection_check(pts, cloud.ground_truth->col(0));
    }
    return r;
}

} // namespace tlle
