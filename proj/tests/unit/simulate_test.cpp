#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace qbic {
namespace {

SimScheme fixed(std::size_t n, double horizon, int substeps, std::uint64_t seed) {
    SimScheme s;
    s.n = n;
    s.h_rule = StepRule::FixedHorizon;
    s.horizon = horizon;
    s.substeps = substeps;
    s.seed = seed;
    return s;
}

SdeSpec true_ergodic() {
    return {1, 1, [](double, State x, Eigen::Ref<Vector> a) { a[0] = -x[0]; },
            [](double, State x, Eigen::Ref<Matrix> b) { b(0, 0) = std::exp(0.5 * (-2.0 * std::cos(x[0]) + 1.0)); }};
}

TEST(EulerMaruyama, DeterministicOdeStep) {
    SdeSpec ode{1, 1, [](double, State x, Eigen::Ref<Vector> a) { a[0] = -x[0]; },
                [](double, State, Eigen::Ref<Matrix> b) { b(0, 0) = 0.0; }};
    const PathGrid p = euler_maruyama(ode, Vector::Constant(1, 1.0), fixed(1, 1.0, 1, 0));
    ASSERT_EQ(p.n(), 1u);
    EXPECT_DOUBLE_EQ(p(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(p(1, 0), 0.0);
}

TEST(EulerMaruyama, BrownianEndpointVarianceIsHorizon) {
    SdeSpec bm{1, 1, [](double, State, Eigen::Ref<Vector> a) { a[0] = 0.0; },
               [](double, State, Eigen::Ref<Matrix> b) { b(0, 0) = 1.0; }};
    const int seeds = 10000;
    Vector end(seeds);
    for (int s = 0; s < seeds; ++s) end[s] = euler_maruyama(bm, Vector::Zero(1), fixed(10, 1.0, 1, s))(10, 0);
    const double mean = end.mean();
    const double var = (end.array() - mean).square().sum() / (seeds - 1);
    EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(EulerMaruyama, ErgodicModelStaysFiniteWithBoundedMean) {
    SimScheme s;
    s.n = 1000;
    s.h_rule = StepRule::Ergodic;
    s.substeps = 10;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        s.seed = seed;
        const PathGrid p = euler_maruyama(true_ergodic(), Vector::Constant(1, 1.0), s);
        EXPECT_TRUE(p.values().allFinite());
        const double m = p.values().col(0).mean();
        EXPECT_GT(m, -2.0);
        EXPECT_LT(m, 2.0);
    }
}

TEST(EulerMaruyama, BitIdenticalForSameSeed) {
    SimScheme s;
    s.n = 500;
    s.h_rule = StepRule::Ergodic;
    s.seed = 42;
    const PathGrid a = euler_maruyama(true_ergodic(), Vector::Constant(1, 1.0), s);
    const PathGrid b = euler_maruyama(true_ergodic(), Vector::Constant(1, 1.0), s);
    EXPECT_EQ(path_to_csv(a), path_to_csv(b));
    s.seed = 43;
    EXPECT_NE(path_to_csv(a), path_to_csv(euler_maruyama(true_ergodic(), Vector::Constant(1, 1.0), s)));
}

TEST(EulerMaruyama, BlowupCarriesStep) {
    SdeSpec explode{1, 1, [](double, State x, Eigen::Ref<Vector> a) { a[0] = x[0] * x[0]; },
                    [](double, State, Eigen::Ref<Matrix> b) { b(0, 0) = 0.0; }};
    try {
        (void)euler_maruyama(explode, Vector::Constant(1, 1.0), fixed(100, 10.0, 1, 0));
        FAIL() << "expected blowup";
    } catch (const SimulationBlowup& e) {
        EXPECT_GT(e.step(), 0u);
    }
}

TEST(EulerMaruyama, SubstepsMustBePositive) {
    SdeSpec bm{1, 1, [](double, State, Eigen::Ref<Vector> a) { a[0] = 0.0; },
               [](double, State, Eigen::Ref<Matrix> b) { b(0, 0) = 1.0; }};
    EXPECT_THROW((void)euler_maruyama(bm, Vector::Zero(1), fixed(10, 1.0, 0, 0)), SpecificationError);
}

TEST(EulerMaruyama, RefinementKeepsEndpointMoments) {
    // Endpoint moments at substeps 10 and 20 agree within 3 MC standard errors.
    const int seeds = 1000;
    auto moments = [&](int substeps, std::uint64_t offset) {
        SimScheme s;
        s.n = 100;
        s.h_rule = StepRule::Ergodic;
        s.substeps = substeps;
        Vector end(seeds);
        for (int k = 0; k < seeds; ++k) {
            s.seed = offset + static_cast<std::uint64_t>(k);
            end[k] = euler_maruyama(true_ergodic(), Vector::Constant(1, 1.0), s)(100, 0);
        }
        const double m = end.mean();
        const double v = (end.array() - m).square().sum() / (seeds - 1);
        const double m4 = (end.array() - m).pow(4).mean();
        return std::array<double, 3>{m, v, m4};
    };
    const auto a = moments(10, 0);
    const auto b = moments(20, 100000);
    const double se_mean = std::sqrt((a[1] + b[1]) / seeds);
    const double se_var = std::sqrt((a[2] - a[1] * a[1] + b[2] - b[1] * b[1]) / seeds);
    EXPECT_LT(std::abs(a[0] - b[0]), 3.0 * se_mean);
    EXPECT_LT(std::abs(a[1] - b[1]), 3.0 * se_var);
}

TEST(StepRule, ErgodicGridRates) {
    for (std::size_t n : {100u, 1000u, 10000u}) {
        SimScheme s;
        s.n = n;
        s.h_rule = StepRule::Ergodic;
        const double h = s.step();
        EXPECT_NEAR(h, std::pow(static_cast<double>(n), -2.0 / 3.0), 1e-15);
        EXPECT_NEAR(static_cast<double>(n) * h, std::cbrt(static_cast<double>(n)), 1e-9);
    }
}

TEST(CovariatePath, TrigDeterministicGrid) {
    const PathGrid p = covariate_path(CovariateKind::TrigDeterministic, fixed(4, 1.0, 1, 0));
    EXPECT_DOUBLE_EQ(p(1, 0), 1.0);
    EXPECT_NEAR(p(1, 1), 0.0, 1e-15);
    EXPECT_NEAR(p(1, 2), 1.0, 1e-15);
}

TEST(CovariatePath, WienerCircleStaysNearUnitCircle) {
    const PathGrid p = covariate_path(CovariateKind::WienerCircle, fixed(1000, 1.0, 100, 3), 1.0);
    double worst = 0.0;
    for (std::size_t j = 0; j <= p.n(); ++j) {
        EXPECT_DOUBLE_EQ(p(j, 0), 1.0);
        worst = std::max(worst, std::abs(p(j, 1) * p(j, 1) + p(j, 2) * p(j, 2) - 1.0));
    }
    EXPECT_LT(worst, 0.05);
}

TEST(CovariatePath, WienerCircleLevel) {
    const PathGrid p = covariate_path(CovariateKind::WienerCircle, fixed(50, 1.0, 10, 3), 10.0);
    EXPECT_DOUBLE_EQ(p(7, 0), 10.0);
}

TEST(CovariatePath, RationalWienerStartsAtOneOneZero) {
    const PathGrid p = covariate_path(CovariateKind::RationalWiener, fixed(50, 1.0, 10, 3));
    EXPECT_DOUBLE_EQ(p(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(p(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(p(0, 2), 0.0);
    for (std::size_t j = 0; j <= p.n(); ++j) {
        // (1/(1+B^2))^2 + (B/(1+B^2))^2 = 1/(1+B^2): the second coordinate
        EXPECT_NEAR(p(j, 1) * p(j, 1) + p(j, 2) * p(j, 2), p(j, 1), 1e-14);
    }
}

TEST(GramDeterminant, TrigDeterministicIsQuarter) {
    for (std::size_t n : {50u, 200u, 1000u}) {
        const PathGrid p = covariate_path(CovariateKind::TrigDeterministic, fixed(n, 1.0, 1, 0));
        EXPECT_NEAR(gram_determinant(p), 0.25, 2.0 / static_cast<double>(n)) << n;
    }
}

TEST(GramDeterminant, RankOnePathIsZero) {
    RowMatrix v(11, 3);
    v.col(0).setOnes();
    v.col(1).setOnes();
    v.col(2).setZero();
    EXPECT_NEAR(gram_determinant(PathGrid(0.1, v)), 0.0, 1e-15);
}

TEST(GramDeterminant, RationalWienerMatchesFinerQuadrature) {
    // Same Brownian path sampled on a 10x finer grid: the coarse Riemann sum over the
    // subsampled points is compared against the fine one.
    const std::size_t n = 2000;
    const PathGrid fine = covariate_path(CovariateKind::RationalWiener, fixed(10 * n, 1.0, 1, 17));
    RowMatrix coarse(n + 1, 3);
    for (std::size_t j = 0; j <= n; ++j) coarse.row(static_cast<Eigen::Index>(j)) = fine.values().row(static_cast<Eigen::Index>(10 * j));
    const double g_fine = gram_determinant(fine);
    const double g_coarse = gram_determinant(PathGrid(1.0 / static_cast<double>(n), coarse));
    EXPECT_GT(g_fine, 0.0);
    EXPECT_NEAR(g_coarse / g_fine, 1.0, 0.01);
}

TEST(GramDeterminant, TrigInvariantUnderTimeReversal) {
    const std::size_t n = 400;
    const PathGrid p = covariate_path(CovariateKind::TrigDeterministic, fixed(n, 1.0, 1, 0));
    RowMatrix rev(n + 1, 3);
    // The left-point sum covers j = 0..n-1; reversing over that index set keeps the same points.
    for (std::size_t j = 0; j < n; ++j) rev.row(static_cast<Eigen::Index>(j)) = p.values().row(static_cast<Eigen::Index>(n - 1 - j));
    rev.row(static_cast<Eigen::Index>(n)) = p.values().row(static_cast<Eigen::Index>(n));
    EXPECT_NEAR(gram_determinant(PathGrid(p.h(), rev)), gram_determinant(p), 1e-12);
}

TEST(VolatilityRegression, ResponseSharesGridAndStartsAtZero) {
    const auto s = simulate_volatility_regression(CovariateKind::TrigDeterministic, Eigen::Vector3d(0, -2, 3),
                                                  fixed(100, 1.0, 10, 5));
    EXPECT_EQ(s.response.n(), s.covariates.n());
    EXPECT_DOUBLE_EQ(s.response.h(), s.covariates.h());
    EXPECT_DOUBLE_EQ(s.response(0, 0), 0.0);
}

TEST(PathCsv, RoundTripIsExact) {
    const PathGrid p = test::ou_path(50, 0.01, 9);
    std::stringstream ss(path_to_csv(p));
    const PathGrid q = read_path_csv(ss);
    EXPECT_EQ(q.n(), p.n());
    EXPECT_DOUBLE_EQ(q.h(), p.h());
    EXPECT_TRUE(q.values() == p.values());
    EXPECT_EQ(path_to_csv(p).substr(0, 5), "t,x1\n");
}

TEST(PathCsv, MalformedRejected) {
    std::stringstream ss("t,x1\n0,1\n0.1,abc\n");
    EXPECT_THROW((void)read_path_csv(ss), Error);
}

}  // namespace
}  // namespace qbic
