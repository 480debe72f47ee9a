#include <gtest/gtest.h>

#include "generators.hpp"
#include "mvtv/reference.hpp"
#include "mvtv/univariate.hpp"

using namespace mvtv;
using mvtv::testing::gaussian_matrix;

namespace {

Vector random_vector(Rng& rng, Eigen::Index n, double sd)
{
    return gaussian_matrix(rng, n, 1, sd).col(0);
}

KKTReport kkt_1d(const Vector& x, const Vector& y, double lambda, double tol)
{
    const Matrix xm = x.transpose(), ym = y.transpose();
    return verify_kkt(xm, ym, lambda, {dual_from_primal(xm, ym), std::nullopt}, {tol, 1e-9});
}

}  // namespace

TEST(Tv1dDirect, ZeroLambdaReturnsData)
{
    Rng rng = make_rng(21);
    const Vector y = random_vector(rng, 40, 1.0);
    EXPECT_EQ(tv1d_direct(y, 0.0), y);
}

TEST(Tv1dDirect, ConstantDataIsFixed)
{
    const Vector y = Vector::Constant(30, -1.25);
    for (double lambda : {0.1, 1.0, 100.0})
        EXPECT_LE((tv1d_direct(y, lambda) - y).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Tv1dDirect, SingleSample)
{
    const Vector y = Vector::Constant(1, 4.0);
    EXPECT_EQ(tv1d_direct(y, 3.0), y);
}

TEST(Tv1dDirect, RejectsBadInput)
{
    EXPECT_THROW(tv1d_direct(Vector(), 1.0), DimensionError);
    EXPECT_THROW(tv1d_direct(Vector::Zero(3), -1.0), InvalidArgument);
}

TEST(Tv1dDirect, MatchesIterativeOracle)
{
    Rng rng = make_rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector y = random_vector(rng, 200, 2.0);
        const Vector x = tv1d_direct(y, 1.5);
        ExactOptions opt;
        opt.rel_tol = 1e-10;
        const Vector oracle = solve_exact(y.transpose(), 1.5, opt).x.row(0).transpose();
        EXPECT_LE((x - oracle).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(Tv1dDirect, SatisfiesOptimalityConditions)
{
    Rng rng = make_rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<Eigen::Index>(mvtv::testing::uniform_index(rng, 2, 300));
        const double lambda = std::uniform_real_distribution<double>(0.01, 20.0)(rng);
        const Vector y = mvtv::testing::blocky_signal(rng, 1, n, 15, 5.0, 1.0).row(0).transpose();
        const Vector x = tv1d_direct(y, lambda);
        const KKTReport r = kkt_1d(x, y, lambda, 1e-8);
        EXPECT_TRUE(r.pass) << "trial " << trial << ": " << r.max_primal_residual << ' '
                            << r.max_dual_feasibility_violation << ' ' << r.max_gradient_link_violation;
    }
}

TEST(Tv1dDirect, MeanIsPreserved)
{
    Rng rng = make_rng(24);
    for (int trial = 0; trial < 30; ++trial) {
        const Vector y = random_vector(rng, 120, 3.0);
        const Vector x = tv1d_direct(y, 2.0);
        EXPECT_NEAR(x.mean(), y.mean(), 1e-10);
    }
}

TEST(Tv1dDirect, LargeLambdaGivesGlobalMean)
{
    Rng rng = make_rng(25);
    const Vector y = random_vector(rng, 80, 1.0);
    const double lambda = 80.0 * (y.maxCoeff() - y.minCoeff());
    const Vector x = tv1d_direct(y, lambda);
    EXPECT_LT((x.array() - y.mean()).abs().maxCoeff(), 1e-12);
    EXPECT_TRUE(kkt_1d(x, y, lambda, 1e-8).pass);
}

TEST(Tv1dWeighted, ConstantWeightsMatchDirect)
{
    Rng rng = make_rng(26);
    const Vector y = random_vector(rng, 90, 2.0);
    EXPECT_EQ(tv1d_weighted(y, Vector::Constant(89, 0.8)), tv1d_direct(y, 0.8));
}

TEST(Tv1dWeighted, ZeroWeightsReturnData)
{
    Rng rng = make_rng(27);
    const Vector y = random_vector(rng, 50, 2.0);
    EXPECT_LT((tv1d_weighted(y, Vector::Zero(49)) - y).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Tv1dWeighted, FreeGapSplitsIntoTwoMeans)
{
    Rng rng = make_rng(28);
    for (Eigen::Index split : {0, 5, 20, 38}) {
        const Vector y = random_vector(rng, 40, 2.0);
        Vector w = Vector::Constant(39, 1e6);
        w(split) = 0.0;
        const Vector x = tv1d_weighted(y, w);
        const double left = y.head(split + 1).mean(), right = y.tail(39 - split).mean();
        EXPECT_LT((x.head(split + 1).array() - left).abs().maxCoeff(), 1e-9);
        EXPECT_LT((x.tail(39 - split).array() - right).abs().maxCoeff(), 1e-9);
    }
}

TEST(Tv1dWeighted, AgreesWithOptimalityOfWeightedProblem)
{
    Rng rng = make_rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector y = random_vector(rng, 60, 2.0);
        Vector w(59);
        for (Eigen::Index k = 0; k < 59; ++k) w(k) = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
        const Vector x = tv1d_weighted(y, w);
        const Matrix u = dual_from_primal(x.transpose(), y.transpose());
        EXPECT_NEAR(x.sum(), y.sum(), 1e-9);
        for (Eigen::Index k = 0; k < 59; ++k) {
            const double d = x(k + 1) - x(k);
            if (std::abs(d) > 1e-9) EXPECT_NEAR(u(0, k), -w(k) * (d > 0 ? 1.0 : -1.0), 1e-9);
            else EXPECT_LE(std::abs(u(0, k)), w(k) + 1e-9);
        }
    }
}

TEST(Tv1dWeighted, RejectsNegativeWeight)
{
    Vector w = Vector::Ones(4);
    w(2) = -0.1;
    EXPECT_THROW(tv1d_weighted(Vector::Zero(5), w), InvalidArgument);
    EXPECT_THROW(tv1d_weighted(Vector::Zero(5), Vector::Ones(5)), DimensionError);
}
