#include <tlle/dataset.hpp>
#include <tlle/metrics.hpp>
#include <tlle/pipeline.hpp>

#include <gtest/gtest.h>

using namespace tlle;

namespace {

RunConfig tlle_config(Index k, Index d, std::optional<Index> dm, std::optional<Index> m)
{
    RunConfig c;
    c.method = Method::tlle;
    c.k = k;
    c.d = d;
    c.d_manifold = dm;
    c.m = m;
    return c;
}

template <class F>
std::string message_of(F&& f)
{
    try {
        f();
    } catch (const InvalidArgument& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Config, MethodNames)
{
    EXPECT_EQ(parse_method("tlle"), Method::tlle);
    EXPECT_EQ(parse_method("hlle"), Method::hlle);
    EXPECT_EQ(parse_method("lle"), Method::lle);
    EXPECT_THROW(parse_method("ltsa"), InvalidArgument);
}

TEST(Config, TlleBounds)
{
    EXPECT_NO_THROW(validate_config(tlle_config(8, 2, 2, 5), 100, 3));
    EXPECT_NE(message_of([] { validate_config(tlle_config(8, 2, 2, 6), 100, 3); }).find("m <= k-d_M-1"),
              std::string::npos);
    EXPECT_THROW(validate_config(tlle_config(8, 2, 3, 1), 100, 4), InvalidArgument); // d_M > d
    EXPECT_THROW(validate_config(tlle_config(3, 2, 2, 1), 100, 3), InvalidArgument); // k < d_M + 2
    EXPECT_THROW(validate_config(tlle_config(8, 3, 2, 1), 100, 3), InvalidArgument); // d >= D
    EXPECT_THROW(validate_config(tlle_config(8, 2, 0, 1), 100, 3), InvalidArgument);
    EXPECT_THROW(validate_config(tlle_config(100, 2, 2, 1), 100, 3), InvalidArgument); // k > N-1
}

TEST(Config, HlleBound)
{
    RunConfig c;
    c.method = Method::hlle;
    c.d = 2;
    c.k = 5;
    EXPECT_NE(message_of([&] { validate_config(c, 100, 3); }).find("hlle requires k >= 1 + d + d(d+1)/2 = 6"),
              std::string::npos);
    c.k = 6;
    EXPECT_NO_THROW(validate_config(c, 100, 3));
}

TEST(Pipeline, EstimatesDimensionWhenOmitted)
{
    const auto cloud = gen_trefoil(500, 3);
    const auto r = run_pipeline(cloud, tlle_config(10, 2, std::nullopt, std::nullopt));
    ASSERT_TRUE(r.dimension_estimate);
    EXPECT_EQ(*r.config.d_manifold, 1);
    EXPECT_EQ(*r.config.m, 2);
    const auto side = embedding_sidecar(r);
    EXPECT_EQ(side["dM_estimate"]["dimension"], 1);
    EXPECT_EQ(side["config"]["dM"], 1);
}

TEST(Pipeline, EstimateAboveTargetIsRejected)
{
    const auto cloud = gen_gaussian_blob(300, 4, 3);
    EXPECT_THROW(run_pipeline(cloud, tlle_config(12, 2, std::nullopt, 1)), InvalidArgument);
}

TEST(Pipeline, AllMethodsProduceValidEmbeddings)
{
    const auto cloud = gen_swiss_roll_hole(600, 0.1, 2);
    for (const Method m : {Method::lle, Method::hlle, Method::tlle}) {
        RunConfig c = tlle_config(10, 2, 2, 2);
        c.method = m;
        const auto r = run_pipeline(cloud, c);
        const auto& y = r.embedding.coordinates;
        EXPECT_LT((y * y.transpose() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8) << to_string(m);
        EXPECT_LT((y * Eigen::VectorXd::Ones(600)).cwiseAbs().maxCoeff(), 1e-8) << to_string(m);
    }
}

TEST(Pipeline, TlleAndHlleAgreeOnSwissRoll)
{
    const auto cloud = gen_swiss_roll_hole(1500, 0.1, 1);
    const auto t = run_pipeline(cloud, tlle_config(8, 2, 2, 2));
    RunConfig h = tlle_config(8, 2, 2, 2);
    h.method = Method::hlle;
    const auto hr = run_pipeline(cloud, h);
    EXPECT_LT(procrustes_error(t.embedding.points(), *cloud.ground_truth), 0.1);
    EXPECT_LT(procrustes_error(t.embedding.points(), hr.embedding.points()), 0.05);
}

TEST(Pipeline, OrphanCoverageRepairsNullSpace)
{
    const auto cloud = gen_swiss_roll_hole(1500, 0.1, 7);
    RunConfig c = tlle_config(8, 2, 2, 2);
    c.seed = 3;
    c.cover_orphans = false;
    EXPECT_THROW(run_pipeline(cloud, c), DegenerateNullSpaceError);

    c.cover_orphans = true;
    const auto r = run_pipeline(cloud, c);
    EXPECT_FALSE(r.orphans.empty());
    EXPECT_FALSE(r.embedding.degenerate_null_space);
    EXPECT_LT(procrustes_error(r.embedding.points(), *cloud.ground_truth), 0.1);
}

TEST(Pipeline, OrphanCoverageDoesNotHideDisconnection)
{
    // two far apart copies: covering orphans must not glue them together
    const auto one = gen_swiss_roll_hole(300, 0.1, 2);
    PointCloud two;
    two.points.resize(600, 3);
    two.points.topRows(300) = one.points;
    two.points.bottomRows(300) = one.points.rowwise() + Eigen::RowVector3d(1e3, 0.0, 0.0);
    EXPECT_THROW(run_pipeline(two, tlle_config(8, 2, 2, 2)), DegenerateNullSpaceError);
}
