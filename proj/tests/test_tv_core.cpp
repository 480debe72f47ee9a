#include <gtest/gtest.h>

#include "generators.hpp"
#include "mvtv/reference.hpp"
#include "mvtv/tv_core.hpp"

using namespace mvtv;
using mvtv::testing::gaussian_matrix;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows)
{
    Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) a(i, j++) = v;
        ++i;
    }
    return a;
}

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

}  // namespace

TEST(FirstDifference, ConstantSignalGivesZeros)
{
    EXPECT_EQ(first_difference(mat({{1, 1, 1}})), mat({{0, 0}}));
}

TEST(FirstDifference, HandArithmetic)
{
    EXPECT_EQ(first_difference(mat({{0, 2, 5}, {1, 1, 0}})), mat({{2, 3}, {0, -1}}));
}

TEST(FirstDifference, RejectsSingleSample)
{
    EXPECT_THROW(first_difference(Matrix::Zero(2, 1)), DimensionError);
}

TEST(AdjointDifference, BoundaryRows)
{
    EXPECT_EQ(adjoint_difference(mat({{1, 1}})), mat({{-1, 0, 1}}));
}

TEST(AdjointDifference, ZeroMapsToZero)
{
    EXPECT_EQ(adjoint_difference(Matrix::Zero(3, 4)), Matrix::Zero(3, 5));
}

TEST(AdjointDifference, InnerProductIdentity)
{
    Rng rng = make_rng(11);
    for (auto [M, N] : {std::pair<Eigen::Index, Eigen::Index>{3, 50}, {2, 100}, {1, 2}, {5, 7}}) {
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix x = gaussian_matrix(rng, M, N);
            const Matrix u = gaussian_matrix(rng, M, N - 1);
            const double lhs = inner(first_difference(x), u);
            const double rhs = inner(x, adjoint_difference(u));
            EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
        }
    }
}

TEST(PrimalObjective, ConstantAtDataIsZero)
{
    const Matrix y = Matrix::Constant(2, 6, 3.5);
    EXPECT_EQ(primal_objective(y, y, 4.0), 0.0);
}

TEST(PrimalObjective, DataEqualsPrimalLeavesPenalty)
{
    const Matrix y = mat({{0, 3, 3}, {0, 4, 4}});
    EXPECT_DOUBLE_EQ(primal_objective(y, y, 2.0), 2.0 * 5.0);
}

TEST(PrimalObjective, HandArithmetic)
{
    EXPECT_DOUBLE_EQ(primal_objective(mat({{1, 1}}), mat({{0, 2}}), 1.0), 1.0);
}

TEST(PrimalObjective, RejectsBadInput)
{
    EXPECT_THROW(primal_objective(Matrix::Zero(2, 3), Matrix::Zero(2, 4), 1.0), DimensionError);
    EXPECT_THROW(primal_objective(Matrix::Zero(2, 3), Matrix::Zero(2, 3), 0.0), InvalidArgument);
}

TEST(PrimalObjective, MidpointConvexity)
{
    Rng rng = make_rng(12);
    const Matrix y = gaussian_matrix(rng, 3, 40);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix a = gaussian_matrix(rng, 3, 40, 2.0);
        const Matrix b = gaussian_matrix(rng, 3, 40, 2.0);
        const double mid = primal_objective(0.5 * (a + b), y, 0.7);
        const double avg = 0.5 * (primal_objective(a, y, 0.7) + primal_objective(b, y, 0.7));
        EXPECT_LE(mid, avg + 1e-12 * std::abs(avg));
    }
}

TEST(PrimalObjective, OracleBeatsData)
{
    Rng rng = make_rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix y = gaussian_matrix(rng, 2, 60, 3.0);
        const Matrix x = solve_exact(y, 1.5).x;
        EXPECT_LE(primal_objective(x, y, 1.5), primal_objective(y, y, 1.5));
    }
}

TEST(DualFromPrimal, ReproducesPrimalLink)
{
    Rng rng = make_rng(14);
    const Matrix y = gaussian_matrix(rng, 2, 30);
    const Matrix x = Matrix::Constant(2, 30, 0.0).colwise() + y.rowwise().mean();
    const Matrix u = dual_from_primal(x, y);
    EXPECT_LT((y + adjoint_difference(u) - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(VerifyKKT, GlobalMeanWithLargeLambdaPasses)
{
    Rng rng = make_rng(15);
    const Matrix y = gaussian_matrix(rng, 2, 25);
    const Matrix x = Matrix::Zero(2, 25).colwise() + y.rowwise().mean();
    const KKTReport r = verify_kkt(x, y, 1e6, {dual_from_primal(x, y), std::nullopt});
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.max_gradient_link_violation, 0.0);
}

TEST(VerifyKKT, NoisyDataWithZeroDualFails)
{
    Rng rng = make_rng(16);
    const Matrix y = gaussian_matrix(rng, 2, 25);
    const KKTReport r = verify_kkt(y, y, 0.1, {Matrix::Zero(2, 24), std::nullopt});
    EXPECT_FALSE(r.pass);
    EXPECT_GT(std::max(r.max_primal_residual, r.max_gradient_link_violation), 1e-6);
}

TEST(VerifyKKT, OracleSolutionPasses)
{
    Rng rng = make_rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix y = gaussian_matrix(rng, 2, 50, 2.0);
        const ExactResult r = solve_exact(y, 1.0);
        const KKTReport rep = verify_kkt(r.x, y, 1.0, {r.u, std::nullopt}, {1e-6, 1e-9});
        EXPECT_TRUE(rep.pass) << rep.max_primal_residual << ' ' << rep.max_dual_feasibility_violation
                              << ' ' << rep.max_gradient_link_violation;
    }
}

TEST(VerifyKKT, PerturbedOracleFails)
{
    Rng rng = make_rng(18);
    const Matrix y = gaussian_matrix(rng, 2, 50, 2.0);
    const ExactResult r = solve_exact(y, 1.0);
    for (Eigen::Index k : {0, 17, 49}) {
        Matrix x = r.x;
        x(1, k) += 10 * 1e-6;
        EXPECT_FALSE(verify_kkt(x, y, 1.0, {r.u, std::nullopt}, {1e-6, 1e-9}).pass);
    }
}

TEST(VerifyKKT, AuxiliaryConditions)
{
    // single negative jump in component 0, none in component 1
    const Matrix y = mat({{2, 0}, {0, 0}});
    const double lambda = 0.5;
    const Matrix x = mat({{1.5, 0.5}, {0, 0}});
    const Matrix u = dual_from_primal(x, y);  // (0.5, 0)
    Matrix z(2, 1);
    z << lambda, 0.0;
    EXPECT_TRUE(verify_kkt(x, y, lambda, {u, z}).pass);
    z << 0.3, 0.4;  // right norm, wrong contact
    EXPECT_FALSE(verify_kkt(x, y, lambda, {u, z}).pass);
    z << -0.3, 0.4;
    EXPECT_GT(verify_kkt(x, y, lambda, {u, z}).max_auxiliary_violation, 0.29);
}

TEST(VerifyKKT, ShapeChecks)
{
    EXPECT_THROW(verify_kkt(Matrix::Zero(2, 4), Matrix::Zero(2, 4), 1.0, {Matrix::Zero(2, 4), std::nullopt}),
                 DimensionError);
    EXPECT_THROW(verify_kkt(Matrix::Zero(2, 4), Matrix::Zero(2, 5), 1.0, {Matrix::Zero(2, 3), std::nullopt}),
                 DimensionError);
}
