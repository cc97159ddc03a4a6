#pragma once

// End-to-end run: neighbors -> local fits -> alignment -> embedding.

#include "assembly.hpp"
#include "error.hpp"
#include "localfit.hpp"
#include "neighbors.hpp"
#include "point_cloud.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tlle {

enum class Method { lle, hlle, tlle };

inline const char* to_string(Method m) noexcept
{
    switch (m) {
    case Method::lle: return "lle";
    case Method::hlle: return "hlle";
    case Method::tlle: return "tlle";
    }
    return "unknown";
}

inline Method parse_method(std::string_view s)
{
    if (s == "lle")
        return Method::lle;
    if (s == "hlle")
        return Method::hlle;
    if (s == "tlle")
        return Method::tlle;
    throw InvalidArgument("unknown method '" + std::string(s) + "' (expected lle, hlle or tlle)");
}

struct RunConfig {
    Method method = Method::tlle;
    Index k = 8;
    Index d = 2;
    std::optional<Index> d_manifold; ///< tlle only; estimated from the data when empty
    std::optional<Index> m;          ///< tlle only; defaults to min(d, k - d_M - 1)
    double reg = 1e-3;               ///< lle only
    std::uint64_t seed = 0;
    double threshold = 0.25;         ///< significance ratio for the d_M estimate
    bool cover_orphans = true;       ///< hlle/tlle: see cover_orphans()
    SolveOptions solve;

    nlohmann::json to_json() const
    {
        nlohmann::json j{{"method", to_string(method)}, {"k", k},       {"d", d},
                         {"reg", reg},                  {"seed", seed}, {"threshold", threshold},
                         {"allow_degenerate", solve.allow_degenerate}, {"cover_orphans", cover_orphans}};
        j["dM"] = d_manifold ? nlohmann::json(*d_manifold) : nlohmann::json(nullptr);
        j["m"] = m ? nlohmann::json(*m) : nlohmann::json(nullptr);
        return j;
    }
};

inline Index default_m(Index k, Index d_manifold, Index d)
{
    return std::max<Index>(1, std::min(d, k - d_manifold - 1));
}

/// Checks everything that does not need the data beyond its shape. Throws
/// InvalidArgument naming the violated bound.
inline void validate_config(const RunConfig& c, Index n, Index dim)
{
    const auto str = [](Index v) { return std::to_string(v); };
    if (c.k < 1)
        throw InvalidArgument("k must be >= 1");
    if (n > 0 && c.k > n - 1)
        throw InvalidArgument("k must be <= N-1 = " + str(n - 1) + " (k = " + str(c.k) + ")");
    if (c.d < 1)
        throw InvalidArgument("d must be >= 1");
    if (dim > 0 && c.d >= dim)
        throw InvalidArgument("d must be < D = " + str(dim) + " (d = " + str(c.d) + ")");
    if (n > 0 && c.d > n - 1)
        throw InvalidArgument("d must be <= N-1");
    switch (c.method) {
    case Method::lle:
        if (!(c.reg >= 0.0))
            throw InvalidArgument("reg must be >= 0");
        break;
    case Method::hlle: {
        const Index need = 1 + c.d + c.d * (c.d + 1) / 2;
        if (c.k < need)
            throw InvalidArgument("hlle requires k >= 1 + d + d(d+1)/2 = " + str(need) + " (k = " + str(c.k) + ")");
        break;
    }
    case Method::tlle:
        if (!(c.threshold > 0.0 && c.threshold < 1.0))
            throw InvalidArgument("threshold must lie in (0, 1)");
        if (c.d_manifold) {
            const Index dm = *c.d_manifold;
            if (dm < 1 || dm > c.d)
                throw InvalidArgument("tlle requires 1 <= d_M <= d (d_M = " + str(dm) + ", d = " + str(c.d) + ")");
            if (c.k < dm + 2)
                throw InvalidArgument("tlle requires k >= d_M + 2 = " + str(dm + 2) + " (k = " + str(c.k) + ")");
            if (c.m && (*c.m < 1 || *c.m > c.k - dm - 1))
                throw InvalidArgument("tlle requires 1 <= m <= k-d_M-1 = " + str(c.k - dm - 1) +
                                      " (m = " + str(*c.m) + ")");
        } else if (c.m && *c.m < 1) {
            throw InvalidArgument("tlle requires m >= 1");
        }
        break;
    }
}

struct PipelineResult {
    RunConfig config; ///< with d_M and m resolved
    std::optional<DimensionEstimate> dimension_estimate;
    NeighborhoodIndex neighbors;   ///< as used by the local fits
    std::vector<Index> orphans;    ///< points put into their own neighborhood
    std::vector<WeightBlock> blocks;
    AlignmentMatrix alignment;
    Embedding embedding;
};

/// Local stage only: neighbors and weight blocks. Resolves d_M and m in
/// `config` for tlle.
inline PipelineResult build_blocks(const PointCloud& cloud, const RunConfig& config)
{
    cloud.validate();
    validate_config(config, cloud.size(), cloud.dim());
    PipelineResult r;
    r.config = config;
    r.neighbors = knn(cloud.points, config.k);
    // A point nobody lists as a neighbor would leave its coordinate out of K
    // entirely (an extra null vector), whatever m is.
    if (config.method != Method::lle && config.cover_orphans)
        r.neighbors = cover_orphans(r.neighbors, &r.orphans);
    switch (config.method) {
    case Method::lle:
        r.blocks = lle_blocks(cloud.points, r.neighbors, config.reg);
        break;
    case Method::hlle: {
        const auto spectra = local_spectra(cloud.points, r.neighbors);
        r.blocks = hlle_blocks(spectra, config.d);
        break;
    }
    case Method::tlle: {
        const auto spectra = local_spectra(cloud.points, r.neighbors);
        if (!r.config.d_manifold) {
            r.dimension_estimate = estimate_intrinsic_dim(spectra, config.threshold);
            const Index est = r.dimension_estimate->dimension;
            if (est > config.d)
                throw InvalidArgument("estimated d_M = " + std::to_string(est) + " exceeds d = " +
                                      std::to_string(config.d) + "; pass --dM or raise d");
            r.config.d_manifold = est;
            validate_config(r.config, cloud.size(), cloud.dim());
        }
        if (!r.config.m)
            r.config.m = default_m(config.k, *r.config.d_manifold, config.d);
        validate_config(r.config, cloud.size(), cloud.dim());
        r.blocks = tlle_blocks(spectra, *r.config.d_manifold, *r.config.m, config.seed);
        break;
    }
    }
    return r;
}

inline PipelineResult run_pipeline(const PointCloud& cloud, const RunConfig& config)
{
    PipelineResult r = build_blocks(cloud, config);
    r.alignment = assemble_alignment(r.neighbors, r.blocks);
    r.embedding = solve_embedding(r.alignment, r.config.d, r.config.solve);
    return r;
}

/// Eigenvalue and configuration sidecar for an embedding.
inline nlohmann::json embedding_sidecar(const PipelineResult& r)
{
    const Embedding& e = r.embedding;
    nlohmann::json j;
    j["config"] = r.config.to_json();
    j["eigenvalues"] = std::vector<double>(e.eigenvalues.data(), e.eigenvalues.data() + e.eigenvalues.size());
    j["null_eigenvalue"] = e.null_eigenvalue;
    j["null_tolerance"] = e.null_tolerance;
    j["degenerate_null_space"] = e.degenerate_null_space;
    j["solver"] = e.solver;
    j["iterations"] = e.iterations;
    j["max_residual"] = e.max_residual;
    j["weight_kind"] = to_string(r.alignment.kind);
    j["orphans_covered"] = r.orphans;
    j["n"] = e.size();
    j["d"] = e.dim();
    if (r.dimension_estimate) {
        nlohmann::json hist = nlohmann::json::object();
        for (const auto& [dim, votes] : r.dimension_estimate->histogram)
            hist[std::to_string(dim)] = votes;
        j["dM_estimate"] = {{"dimension", r.dimension_estimate->dimension},
                            {"histogram", hist},
                            {"threshold", r.config.threshold}};
    }
    return j;
}

} // namespace tlle
