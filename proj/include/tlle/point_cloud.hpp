#pragma once

#include "error.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>

namespace tlle {

using Index = Eigen::Index;

/// N points in R^D stored row-wise, with optional per-point intrinsic
/// parameters (ground truth) used by the evaluation metrics.
struct PointCloud {
    Eigen::MatrixXd points;
    std::optional<Eigen::MatrixXd> ground_truth;

    PointCloud() = default;
    explicit PointCloud(Eigen::MatrixXd pts, std::optional<Eigen::MatrixXd> truth = std::nullopt)
        : points(std::move(pts)), ground_truth(std::move(truth))
    {
    }

    Index size() const noexcept { return points.rows(); }
    Index dim() const noexcept { return points.cols(); }

    void validate() const
    {
        if (points.rows() < 1 || points.cols() < 1)
            throw InvalidArgument("point cloud must have N >= 1 and D >= 1");
        if (!points.allFinite())
            throw InvalidArgument("point cloud contains non-finite coordinates");
        if (ground_truth && ground_truth->rows() != points.rows())
            throw InvalidArgument("ground truth has " + std::to_string(ground_truth->rows()) +
                                  " rows, expected " + std::to_string(points.rows()));
    }
};

} // namespace tlle
