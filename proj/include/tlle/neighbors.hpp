#pragma once

#include "error.hpp"
#include "point_cloud.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tlle {

/// k nearest neighbors of every point, excluding the point itself, ordered by
/// ascending distance (ties by smaller index). Indices are 0-based.
class NeighborhoodIndex {
public:
    NeighborhoodIndex() = default;
    NeighborhoodIndex(Index n, Index k, std::vector<Index> flat)
        : n_(n), k_(k), flat_(std::move(flat))
    {
        if (static_cast<Index>(flat_.size()) != n_ * k_)
            throw StructuralError("neighborhood index storage does not match N*k");
    }

    Index size() const noexcept { return n_; }
    Index k() const noexcept { return k_; }
    std::span<const Index> row(Index i) const
    {
        return {flat_.data() + i * k_, static_cast<std::size_t>(k_)};
    }
    const std::vector<Index>& flat() const noexcept { return flat_; }

private:
    Index n_ = 0;
    Index k_ = 0;
    std::vector<Index> flat_;
};

/// Exact Euclidean kNN by exhaustive scan; rows are computed independently.
inline NeighborhoodIndex knn(const Eigen::MatrixXd& points, Index k)
{
    const Index n = points.rows();
    if (k < 1 || k >= n)
        throw InvalidArgument("knn requires 1 <= k <= N-1 (k = " + std::to_string(k) +
                              ", N = " + std::to_string(n) + ")");
    std::vector<Index> flat(static_cast<std::size_t>(n * k));

#pragma omp parallel
    {
        std::vector<std::pair<double, Index>> cand(static_cast<std::size_t>(n - 1));
#pragma omp for schedule(static)
        for (Index i = 0; i < n; ++i) {
            std::size_t c = 0;
            for (Index j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                cand[c++] = {(points.row(j) - points.row(i)).squaredNorm(), j};
            }
            std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
            for (Index a = 0; a < k; ++a)
                flat[static_cast<std::size_t>(i * k + a)] = cand[static_cast<std::size_t>(a)].second;
        }
    }
    return NeighborhoodIndex(n, k, std::move(flat));
}

inline NeighborhoodIndex knn(const PointCloud& cloud, Index k) { return knn(cloud.points, k); }

/// Points that occur in no neighbor list. Their coordinates never enter an
/// alignment built from rows that exclude the point itself.
inline std::vector<Index> orphan_points(const NeighborhoodIndex& nbrs)
{
    std::vector<Index> in_degree(static_cast<std::size_t>(nbrs.size()), 0);
    for (const Index j : nbrs.flat())
        ++in_degree[static_cast<std::size_t>(j)];
    std::vector<Index> out;
    for (Index i = 0; i < nbrs.size(); ++i)
        if (in_degree[static_cast<std::size_t>(i)] == 0)
            out.push_back(i);
    return out;
}

/// Puts every orphan into its own neighborhood: row i becomes i followed by
/// its neighbors minus one. The dropped neighbor is the farthest one that is
/// still referenced elsewhere, so no new orphan appears (if there is none,
/// the farthest neighbor is dropped). Rows are processed in index order.
inline NeighborhoodIndex cover_orphans(const NeighborhoodIndex& nbrs, std::vector<Index>* covered = nullptr)
{
    const Index n = nbrs.size();
    const Index k = nbrs.k();
    std::vector<Index> flat = nbrs.flat();
    std::vector<Index> in_degree(static_cast<std::size_t>(n), 0);
    for (const Index j : flat)
        ++in_degree[static_cast<std::size_t>(j)];
    if (covered)
        covered->clear();
    for (Index i = 0; i < n; ++i) {
        if (in_degree[static_cast<std::size_t>(i)] != 0)
            continue;
        Index* row = flat.data() + i * k;
        Index drop = k - 1;
        for (Index a = k - 1; a >= 0; --a)
            if (in_degree[static_cast<std::size_t>(row[a])] > 1) {
                drop = a;
                break;
            }
        --in_degree[static_cast<std::size_t>(row[drop])];
        for (Index a = drop; a > 0; --a)
            row[a] = row[a - 1];
        row[0] = i;
        ++in_degree[static_cast<std::size_t>(i)];
        if (covered)
            covered->push_back(i);
    }
    return NeighborhoodIndex(n, k, std::move(flat));
}

/// Debug dump: row i lists its neighbor indices.
inline std::string format_neighbors_csv(const NeighborhoodIndex& nbrs)
{
    std::string out;
    for (Index i = 0; i < nbrs.size(); ++i) {
        const auto row = nbrs.row(i);
        for (std::size_t a = 0; a < row.size(); ++a) {
            if (a > 0)
                out.push_back(',');
            out += std::to_string(row[a]);
        }
        out.push_back('\n');
    }
    return out;
}

} // namespace tlle
