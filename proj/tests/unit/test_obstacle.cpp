#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>

#include "nlobs/error.hpp"
#include "nlobs/obstacle.hpp"

using namespace nlobs;

namespace {

GridSpec default_grid() { return GridSpec{}; }

ObstacleSpec unit_bump() {
    return make_obstacle(ObstacleFamily::cubic_bump, {{1.0, 1.0, 0.0}}, default_grid());
}

}  // namespace

TEST(GridSpec, DefaultsAndValidation) {
    GridSpec g;
    EXPECT_NO_THROW(g.validate());
    EXPECT_DOUBLE_EQ(g.spacing(), 1.0 / 64.0);
    EXPECT_EQ(g.index_of(0.0), 512u);
    EXPECT_DOUBLE_EQ(g.x(g.index_of(0.0)), 0.0);
    EXPECT_DOUBLE_EQ(GridSpec::cylinder_half_height(0.25, 0.25), 0.5);
    GridSpec bad = g;
    bad.n_points = 63;
    EXPECT_THROW(bad.validate(), Error);
    bad = g;
    bad.T = bad.dt;
    EXPECT_THROW(bad.validate(), Error);
    const auto r = g.refined();
    EXPECT_DOUBLE_EQ(r.spacing(), g.spacing() / 2);
    EXPECT_DOUBLE_EQ(r.dt, g.dt / 2);
}

TEST(Obstacle, CubicBumpValues) {
    const auto ob = unit_bump();
    EXPECT_DOUBLE_EQ(ob.phi(0.0), 1.0);
    EXPECT_DOUBLE_EQ(ob.phi(1.0), 0.0);
    EXPECT_DOUBLE_EQ(ob.phi(-1.0), 0.0);
    EXPECT_DOUBLE_EQ(ob.phi(1.5), 0.0);
    EXPECT_GT(ob.phi(0.99), 0.0);
}

TEST(Obstacle, AnalyticDerivativesMatchDifferences) {
    const auto ob = make_obstacle(ObstacleFamily::sum_of_bumps, {{1.0, 1.0, -0.3}, {0.5, 0.7, 0.4}}, default_grid());
    const double e = 1e-5;
    for (double x = -1.4; x <= 1.2; x += 0.0173) {
        EXPECT_NEAR(ob.dphi(x), (ob.phi(x + e) - ob.phi(x - e)) / (2 * e), 1e-8) << x;
        EXPECT_NEAR(ob.d2phi(x), (ob.dphi(x + e) - ob.dphi(x - e)) / (2 * e), 1e-7) << x;
    }
}

TEST(Obstacle, SecondDerivativeContinuousAtSupportEdge) {
    const auto ob = unit_bump();
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
        const double left = (ob.phi(1.0 - 2 * h) - 2 * ob.phi(1.0 - h) + ob.phi(1.0)) / (h * h);
        const double right = (ob.phi(1.0) - 2 * ob.phi(1.0 + h) + ob.phi(1.0 + 2 * h)) / (h * h);
        EXPECT_LE(std::abs(left - right), 200.0 * h) << h;
    }
    EXPECT_NEAR(ob.d2phi(1.0 - 1e-9), 0.0, 1e-7);
}

TEST(Obstacle, LipschitzConstantMatchesMaximizationOracle) {
    // golden-section maximization of 6 x (1 - x^2)^2 on [0, 1]
    auto g = [](double x) { return 6.0 * x * (1.0 - x * x) * (1.0 - x * x); };
    double a = 0.0, b = 1.0;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double c = b - r * (b - a), d = a + r * (b - a);
        (g(c) > g(d) ? b : a) = g(c) > g(d) ? d : c;
    }
    const double oracle = g(0.5 * (a + b));
    EXPECT_NEAR(0.5 * (a + b), 1.0 / std::sqrt(5.0), 1e-8);
    EXPECT_NEAR(oracle, 1.7173002, 1e-7);
    EXPECT_NEAR(unit_bump().lipschitz_constant(), oracle, 1e-8);
}

TEST(Obstacle, GeometryAndParameterErrors) {
    const GridSpec g;
    try {
        make_obstacle(ObstacleFamily::cubic_bump, {{1.0, 3.0, 5.0}}, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::geometry);
    }
    EXPECT_THROW(make_obstacle(ObstacleFamily::cubic_bump, {{-1.0, 1.0, 0.0}}, g), Error);
    EXPECT_THROW(make_obstacle(ObstacleFamily::cubic_bump, {{1.0, 0.0, 0.0}}, g), Error);
    EXPECT_THROW(make_obstacle(ObstacleFamily::cubic_bump, {{1, 1, 0}, {1, 1, 1}}, g), Error);
}

TEST(Obstacle, LphiMatchesOperatorApplication) {
    GridSpec g;
    g.n_points = 257;
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto ob = make_obstacle(ObstacleFamily::cubic_bump, {{1.0, 1.0, 0.0}}, g);
    const auto expected = op.apply(ob.values(g));
    const auto& got = ob.Lphi(op, g);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], expected[i]);
    EXPECT_GT(got[128], 0.0);
}

TEST(InitialState, LiftsBySqrtEpsilon) {
    const GridSpec g;
    const auto ob = unit_bump();
    const auto phi = ob.values(g);
    const auto s0 = initial_state(ob, g, 0.0);
    for (std::size_t i = 0; i < phi.size(); ++i) EXPECT_EQ(s0.u[i], phi[i]);
    const auto s1 = initial_state(ob, g, 0.01);
    EXPECT_DOUBLE_EQ(s1.u[g.index_of(0.0)], 1.1);
    EXPECT_EQ(s1.t, 0.0);
    const double lift = std::sqrt(0.01);
    for (std::size_t i = 0; i < phi.size(); ++i) EXPECT_EQ(s1.u[i], phi[i] + lift);
    EXPECT_THROW(initial_state(ob, g, -1.0), Error);
}

TEST(WeightedNorm, IndicatorMatchesQuadratureOracle) {
    const GridSpec g;
    std::vector<double> zero(g.n_points, 0.0), ind(g.n_points, 0.0);
    for (std::size_t i = 0; i < g.n_points; ++i) ind[i] = std::abs(g.x(i)) <= 1.0 ? 1.0 : 0.0;
    EXPECT_EQ(weighted_l1s_norm(zero, g, 0.25), 0.0);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double oracle = 2.0 * ts.integrate([](double x) { return 1.0 / (1.0 + std::pow(x, 1.5)); }, 0.0, 1.0);
    EXPECT_NEAR(oracle, 1.4942029, 1e-7);
    // trapezoid over a jump: O(h) edge error
    EXPECT_NEAR(weighted_l1s_norm(ind, g, 0.25), oracle, g.spacing());
}

TEST(WeightedNorm, HomogeneousSubadditiveMonotone) {
    const GridSpec g;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> f(g.n_points), q(g.n_points), sum(g.n_points), scaled(g.n_points), big(g.n_points);
        for (std::size_t i = 0; i < f.size(); ++i) {
            f[i] = nd(rng);
            q[i] = nd(rng);
            sum[i] = f[i] + q[i];
            scaled[i] = -2.5 * f[i];
            big[i] = std::abs(f[i]) + std::abs(q[i]);
        }
        const double nf = weighted_l1s_norm(f, g, 0.25), nq = weighted_l1s_norm(q, g, 0.25);
        EXPECT_NEAR(weighted_l1s_norm(scaled, g, 0.25), 2.5 * nf, 1e-12 * nf);
        EXPECT_LE(weighted_l1s_norm(sum, g, 0.25), nf + nq + 1e-12);
        EXPECT_LE(nf, weighted_l1s_norm(big, g, 0.25));
    }
}
