#pragma once

// Synthetic manifolds with known intrinsic parameters, isometric lifting
// into higher ambient dimensions, and CSV/JSON persistence.

#include "error.hpp"
#include "point_cloud.hpp"
#include "random.hpp"

#include <Eigen/Core>
#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace tlle {

/// Parameter rectangle of the Swiss roll x = (t cos t, s, t sin t).
struct SwissRollShape {
    double t_min = 1.5 * std::numbers::pi;
    double t_max = 3.0 * std::numbers::pi;
    double height = 33.0;
};

/// Arc length of the spiral r = t from 0 to t.
inline double spiral_arc_length(double t)
{
    return 0.5 * (t * std::sqrt(1.0 + t * t) + std::asinh(t));
}

/// Swiss roll with a circular hole.
///
/// (t, s) is drawn uniformly from the shape's rectangle; samples whose
/// isometric coordinates (arc length, s) fall inside the centered disk that
/// covers `hole_fraction` of the unrolled rectangle are rejected. The ground
/// truth holds (arc length measured from t_min, s), which the roll maps
/// isometrically onto the surface.
inline PointCloud gen_swiss_roll_hole(Index n, double hole_fraction, std::uint64_t seed,
                                      const SwissRollShape& shape = {})
{
    if (n < 1)
        throw InvalidArgument("swiss roll requires n >= 1");
    if (!(hole_fraction > 0.0 && hole_fraction < 1.0))
        throw InvalidArgument("hole_fraction must lie in (0, 1)");
    if (!(shape.t_max > shape.t_min) || !(shape.height > 0.0))
        throw InvalidArgument("swiss roll shape must have t_max > t_min and height > 0");

    const double arc0 = spiral_arc_length(shape.t_min);
    const double arc_len = spiral_arc_length(shape.t_max) - arc0;
    const double arc_c = 0.5 * arc_len;
    const double s_c = 0.5 * shape.height;
    const double r2 = hole_fraction * arc_len * shape.height / std::numbers::pi;

    auto engine = make_engine(seed);
    std::uniform_real_distribution<double> t_dist(shape.t_min, shape.t_max);
    std::uniform_real_distribution<double> s_dist(0.0, shape.height);

    Eigen::MatrixXd pts(n, 3);
    Eigen::MatrixXd truth(n, 2);
    for (Index i = 0; i < n;) {
        const double t = t_dist(engine);
        const double s = s_dist(engine);
        const double a = spiral_arc_length(t) - arc0;
        if ((a - arc_c) * (a - arc_c) + (s - s_c) * (s - s_c) < r2)
            continue;
        pts.row(i) << t * std::cos(t), s, t * std::sin(t);
        truth.row(i) << a, s;
        ++i;
    }
    return PointCloud(std::move(pts), std::move(truth));
}

enum class TrefoilForm {
    torus, ///< ((2 + cos 3θ) cos 2θ, (2 + cos 3θ) sin 2θ, sin 3θ), the (2,3) torus knot
    lobed, ///< (sin θ + 2 sin 2θ, cos θ − 2 cos 2θ, −sin 3θ)
};

inline Eigen::Vector3d trefoil_point(double theta, TrefoilForm form = TrefoilForm::torus)
{
    if (form == TrefoilForm::lobed)
        return {std::sin(theta) + 2.0 * std::sin(2.0 * theta),
                std::cos(theta) - 2.0 * std::cos(2.0 * theta), -std::sin(3.0 * theta)};
    const double r = 2.0 + std::cos(3.0 * theta);
    return {r * std::cos(2.0 * theta), r * std::sin(2.0 * theta), std::sin(3.0 * theta)};
}

/// Trefoil knot sampled at θ ~ U[0, 2π); ground truth is θ.
inline PointCloud gen_trefoil(Index n, std::uint64_t seed, TrefoilForm form = TrefoilForm::torus)
{
    if (n < 3)
        throw InvalidArgument("trefoil requires n >= 3");
    auto engine = make_engine(seed);
    std::uniform_real_distribution<double> dist(0.0, 2.0 * std::numbers::pi);
    Eigen::MatrixXd pts(n, 3);
    Eigen::MatrixXd truth(n, 1);
    for (Index i = 0; i < n; ++i) {
        const double theta = dist(engine);
        pts.row(i) = trefoil_point(theta, form).transpose();
        truth(i, 0) = theta;
    }
    return PointCloud(std::move(pts), std::move(truth));
}

/// Isotropic standard Gaussian blob in R^dim (no ground truth).
inline PointCloud gen_gaussian_blob(Index n, Index dim, std::uint64_t seed)
{
    if (n < 1 || dim < 1)
        throw InvalidArgument("gaussian blob requires n >= 1 and dim >= 1");
    auto engine = make_engine(seed);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd pts(n, dim);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < dim; ++j)
            pts(i, j) = dist(engine);
    return PointCloud(std::move(pts));
}

/// Orthonormalized seeded Gaussian matrix (columns sign-fixed so that the
/// QR factor has a positive diagonal).
inline Eigen::MatrixXd random_orthogonal(Index dim, std::uint64_t seed)
{
    if (dim < 1)
        throw InvalidArgument("orthogonal matrix dimension must be >= 1");
    auto engine = make_engine(seed, 0x51u);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd g(dim, dim);
    for (Index j = 0; j < dim; ++j)
        for (Index i = 0; i < dim; ++i)
            g(i, j) = dist(engine);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < dim; ++j)
        if (r(j, j) < 0.0)
            q.col(j) = -q.col(j);
    return q;
}

/// Zero-pads every point to `rotation.rows()` coordinates and applies the
/// orthogonal matrix. Ground truth is carried over unchanged.
inline PointCloud lift_with(const PointCloud& cloud, const Eigen::MatrixXd& rotation)
{
    const Index target = rotation.rows();
    if (rotation.cols() != target)
        throw InvalidArgument("rotation must be square");
    if (target < cloud.dim())
        throw InvalidArgument("target_dim " + std::to_string(target) + " is smaller than D = " +
                              std::to_string(cloud.dim()));
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(cloud.size(), target);
    padded.leftCols(cloud.dim()) = cloud.points;
    return PointCloud(padded * rotation.transpose(), cloud.ground_truth);
}

inline PointCloud lift_isometric(const PointCloud& cloud, Index target_dim, std::uint64_t seed)
{
    if (target_dim < cloud.dim())
        throw InvalidArgument("target_dim " + std::to_string(target_dim) + " is smaller than D = " +
                              std::to_string(cloud.dim()));
    return lift_with(cloud, random_orthogonal(target_dim, seed));
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view cell, double& out)
{
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+')
        cell.remove_prefix(1);
    if (cell.empty())
        return false;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc{} && ptr == cell.data() + cell.size();
}

inline std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return cells;
}

inline void append_double(std::string& out, double v)
{
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

} // namespace detail

/// Parses comma-separated rows of numbers. The first line is treated as a
/// header when none of its cells is numeric. Blank lines are skipped.
inline Eigen::MatrixXd parse_csv_matrix(std::istream& in)
{
    std::vector<double> values;
    Index cols = -1;
    Index rows = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty())
            continue;
        const auto cells = detail::split_commas(line);
        std::vector<double> row;
        row.reserve(cells.size());
        std::size_t numeric = 0;
        for (const auto cell : cells) {
            double v = 0.0;
            if (detail::parse_double(cell, v)) {
                ++numeric;
                row.push_back(v);
            }
        }
        if (first_content_line && numeric == 0) {
            first_content_line = false;
            continue;
        }
        first_content_line = false;
        if (numeric != cells.size())
            throw ParseError(line_no, "non-numeric cell");
        for (const double v : row)
            if (!std::isfinite(v))
                throw ParseError(line_no, "non-finite value");
        if (cols < 0)
            cols = static_cast<Index>(row.size());
        else if (static_cast<Index>(row.size()) != cols)
            throw ParseError(line_no, "expected " + std::to_string(cols) + " columns, found " +
                                          std::to_string(row.size()));
        values.insert(values.end(), row.begin(), row.end());
        ++rows;
    }
    if (rows == 0)
        throw ParseError(line_no, "no numeric rows");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), rows, cols);
}

inline Eigen::MatrixXd load_csv_matrix(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open " + path.string());
    return parse_csv_matrix(in);
}

inline PointCloud load_csv(const std::filesystem::path& path)
{
    PointCloud cloud(load_csv_matrix(path));
    cloud.validate();
    return cloud;
}

/// Shortest round-trip representation of every value, '.' decimal point.
inline std::string format_csv(const Eigen::MatrixXd& m)
{
    std::string out;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0)
                out.push_back(',');
            detail::append_double(out, m(i, j));
        }
        out.push_back('\n');
    }
    return out;
}

inline void save_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidArgument("cannot write " + path.string());
    out << format_csv(m);
    if (!out)
        throw InvalidArgument("failed writing " + path.string());
}

inline void save_csv(const PointCloud& cloud, const std::filesystem::path& path)
{
    save_csv(cloud.points, path);
}

/// Reproducibility record written next to a generated data set.
inline nlohmann::json make_manifest(const std::string& generator, Index n, std::uint64_t seed,
                                    nlohmann::json parameters)
{
    return nlohmann::json{{"generator", generator},
                          {"n", n},
                          {"seed", seed},
                          {"parameters", std::move(parameters)}};
}

inline nlohmann::json swiss_roll_parameters(double hole_fraction, const SwissRollShape& shape)
{
    return nlohmann::json{{"hole_fraction", hole_fraction},
                          {"t_min", shape.t_min},
                          {"t_max", shape.t_max},
                          {"height", shape.height},
                          {"hole_geometry", "disk centered in (arc length, s) coordinates"},
                          {"sampling", "uniform in (t, s)"},
                          {"ground_truth", "arc length from t_min, s"}};
}

} // namespace tlle
