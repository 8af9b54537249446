#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlobs/complementarity_solver.hpp"
#include "nlobs/error.hpp"
#include "nlobs/penalized_solver.hpp"

using namespace nlobs;

namespace {

GridSpec coarse_grid() {
    GridSpec g;
    g.n_points = 257;  // h = 1/16
    g.dt = 1.0 / 64.0;
    g.T = 0.5;
    return g;
}

ObstacleSpec zero_obstacle() { return ObstacleSpec(ObstacleFamily::sum_of_bumps, {}); }

ObstacleSpec bump(const GridSpec& g, double A = 1.0, double r = 1.0) {
    return make_obstacle(ObstacleFamily::cubic_bump, {{A, r, 0.0}}, g);
}

double ode_closed_form(double u0, double t, double eps) { return eps * std::log(std::exp(u0 / eps) + t / eps); }

}  // namespace

TEST(Beta, Values) {
    EXPECT_EQ(beta(0.0, 0.1), 1.0);
    EXPECT_DOUBLE_EQ(beta(std::sqrt(0.01), 0.01), std::exp(-1.0 / std::sqrt(0.01)));
    EXPECT_LT(beta(1.0, 0.1), beta(0.0, 0.1));
    EXPECT_EQ(beta(10.0, 1e-3), 0.0);
    EXPECT_THROW(beta(0.0, 0.0), Error);
}

TEST(PenalizedStep, ConstantStateFollowsOde) {
    GridSpec g = coarse_grid();
    OperatorOptions o;
    o.far_field = FarField::constant_extension;
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g, o);
    const auto ob = zero_obstacle();
    PenalizedConfig cfg;
    cfg.epsilon = 0.01;
    cfg.dt = 1.0 / 256.0;
    const auto s0 = initial_state(ob, g, cfg.epsilon);
    const auto s1 = step_penalized(s0, cfg, op, g, ob);
    const double expected = ode_closed_form(0.1, cfg.dt, cfg.epsilon);
    // backward Euler local truncation: dt^2 |u''| / 2 with u'' = -beta^2 / eps
    const double b0 = beta(0.1, cfg.epsilon);
    const double tol = cfg.dt * cfg.dt * b0 * b0 / cfg.epsilon + 1e-14;
    EXPECT_LT(tol, 1e-10);
    for (double v : s1.u) EXPECT_NEAR(v, expected, tol);
    EXPECT_DOUBLE_EQ(s1.t, cfg.dt);
}

TEST(PenalizedStep, InitialTimeDerivative) {
    // u(., 0) = phi + sqrt(eps) gives u_t(., 0) = -L phi + e^{-1/sqrt(eps)}; implicit Euler is first order
    GridSpec g = coarse_grid();
    OperatorOptions o;
    o.far_field = FarField::constant_extension;
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g, o);
    const auto ob = bump(g);
    const auto& lphi = ob.Lphi(op, g);
    double prev = 0.0;
    for (double dt : {1e-3, 5e-4, 2.5e-4}) {
        PenalizedConfig cfg;
        cfg.epsilon = 0.01;
        cfg.dt = dt;
        const auto s0 = initial_state(ob, g, cfg.epsilon);
        const auto s1 = step_penalized(s0, cfg, op, g, ob);
        double err = 0.0;
        for (std::size_t i = 0; i < g.n_points; ++i) {
            const double expected = -lphi[i] + std::exp(-1.0 / std::sqrt(cfg.epsilon));
            err = std::max(err, std::abs((s1.u[i] - s0.u[i]) / dt - expected));
        }
        EXPECT_LT(err, 50.0 * dt) << dt;
        if (prev > 0.0) EXPECT_NEAR(prev / err, 2.0, 0.3) << dt;
        prev = err;
    }
}

TEST(PenalizedSolve, ZeroObstacleTrajectoryFollowsOde) {
    GridSpec g = coarse_grid();
    OperatorOptions o;
    o.far_field = FarField::constant_extension;
    PenalizedConfig cfg;
    cfg.epsilon = 0.05;
    cfg.dt = g.dt;
    const auto traj = solve_penalized(g, fractional_kernel(0.25, 1), zero_obstacle(), cfg, o);
    ASSERT_TRUE(traj.valid);
    const double b0 = beta(std::sqrt(cfg.epsilon), cfg.epsilon);
    const double tol = g.T * cfg.dt * b0 * b0 / cfg.epsilon;
    for (std::size_t k = 0; k < traj.levels(); ++k) {
        const auto [lo, hi] = std::minmax_element(traj.u[k].begin(), traj.u[k].end());
        EXPECT_LE(*hi - *lo, 1e-11);
        // backward Euler on the scalar ODE: global error O(dt)
        EXPECT_NEAR(*lo, ode_closed_form(std::sqrt(cfg.epsilon), traj.t[k], cfg.epsilon), tol);
    }
}

TEST(PenalizedSolve, AprioriBoundsAndMonotonicity) {
    GridSpec g = coarse_grid();
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto ob = bump(g);
    for (double eps : {0.04, 0.01}) {
        PenalizedConfig cfg;
        cfg.epsilon = eps;
        cfg.dt = g.dt;
        const auto traj = solve_penalized(op, g, ob, cfg);
        ASSERT_TRUE(traj.valid);
        const auto& Lphi = ob.Lphi(op, g);
        double lsup = 0.0;
        for (double v : Lphi) lsup = std::max(lsup, std::abs(v));
        const double slack = penalized_slack(Lphi, eps);
        double bmax = 0.0;
        for (double b : traj.max_beta) bmax = std::max(bmax, b);
        EXPECT_LE(bmax, std::max(1.0, lsup) * (1.0 + 1e-6));
        for (std::size_t k = 0; k < traj.levels(); ++k)
            for (std::size_t i = 0; i < traj.nodes(); ++i) {
                const double v = traj.v(k, i);
                EXPECT_GE(v, -slack - 1e-12);
                EXPECT_LE(v, std::sqrt(eps) + 2.0 * traj.t[k] * std::max(1.0, lsup) + 1e-12);
                if (k > 0) EXPECT_GE(traj.u[k][i] - traj.u[k - 1][i], -10.0 * cfg.dt * bmax);
            }
    }
}

TEST(PenalizedStep, StepDoublingIsSecondOrderLocally) {
    GridSpec g = coarse_grid();
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto ob = bump(g);
    auto mismatch = [&](double dt) {
        PenalizedConfig full, half;
        full.epsilon = half.epsilon = 0.05;
        full.dt = dt;
        half.dt = dt / 2;
        FieldSnapshot s = initial_state(ob, g, 0.05);
        const auto a = step_penalized(s, full, op, g, ob);
        const auto b = step_penalized(step_penalized(s, half, op, g, ob), half, op, g, ob);
        double d = 0.0;
        for (std::size_t i = 0; i < a.u.size(); ++i) d = std::max(d, std::abs(a.u[i] - b.u[i]));
        return d;
    };
    const double d1 = mismatch(1.0 / 64), d2 = mismatch(1.0 / 128), d3 = mismatch(1.0 / 256);
    EXPECT_GT(d1 / d2, 3.0);
    EXPECT_GT(d2 / d3, 3.0);
}

TEST(PenalizedSolve, DiscreteComparison) {
    GridSpec g = coarse_grid();
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto phi = bump(g, 1.0, 1.0);
    const auto psi = bump(g, 1.2, 1.3);
    PenalizedConfig cfg;
    cfg.epsilon = 0.01;
    cfg.dt = g.dt;
    const auto u = solve_penalized(op, g, phi, cfg);
    const auto v = solve_penalized(op, g, psi, cfg);
    for (std::size_t k = 0; k < u.levels(); ++k)
        for (std::size_t i = 0; i < u.nodes(); ++i) EXPECT_LE(u.u[k][i], v.u[k][i] + 1e-8);
}

TEST(PenalizedStep, ExplicitSchemeGuardedByStabilityLimit) {
    GridSpec g = coarse_grid();
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto ob = bump(g);
    PenalizedConfig cfg;
    cfg.epsilon = 0.05;
    cfg.scheme = PenalizedScheme::explicit_euler;
    const double limit = stability_limit(op, ob.Lphi(op, g), cfg.epsilon);
    cfg.dt = 1.5 * limit;
    try {
        PenalizedStepper(op, g, ob, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::stability);
    }
    cfg.dt = limit / 2;
    PenalizedConfig imex = cfg;
    imex.scheme = PenalizedScheme::imex;
    auto a = initial_state(ob, g, cfg.epsilon), b = a;
    PenalizedStepper ex(op, g, ob, cfg), im(op, g, ob, imex);
    for (int k = 0; k < 40; ++k) {
        a = ex.step(a);
        b = im.step(b);
    }
    for (std::size_t i = 0; i < a.u.size(); ++i) EXPECT_NEAR(a.u[i], b.u[i], 40 * cfg.dt * cfg.dt * 50);
}

TEST(PenalizedStep, NewtonFailureReportsNode) {
    GridSpec g = coarse_grid();
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto ob = bump(g);
    PenalizedConfig cfg;
    cfg.epsilon = 0.01;
    cfg.max_newton = 1;
    auto s = initial_state(ob, g, 0.0);
    try {
        step_penalized(s, cfg, op, g, ob);
        FAIL();
    } catch (const StepError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::step);
        EXPECT_LT(e.node(), g.n_points);
    }
}

TEST(EpsilonStudy, GapsShrinkWithEpsilon) {
    GridSpec g = coarse_grid();
    g.T = 0.5;
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto ob = bump(g);
    ProjectedConfig pc;
    pc.dt = g.dt;
    const auto ref = solve_obstacle(op, g, ob, pc);
    EpsilonStudyOptions opt;
    opt.t1 = 0.1;
    opt.t2 = 0.4;
    opt.base.dt = g.dt;
    const auto study = epsilon_study(op, g, ob, {0.04, 0.01, 0.0025}, ref, opt);
    ASSERT_EQ(study.rows.size(), 3u);
    EXPECT_TRUE(study.monotone_reference);
    EXPECT_TRUE(study.monotone_next);
    EXPECT_TRUE(std::isnan(study.rows.back().gap_next));
    EXPECT_THROW(epsilon_study(op, g, ob, {0.01, 0.02, 0.001}, ref, opt), Error);
    EXPECT_THROW(epsilon_study(op, g, ob, {0.01, 0.001}, ref, opt), Error);
}

namespace {

// Exhaustive active-set enumeration for a small LCP.
std::vector<double> enumerate_lcp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& phi) {
    const int n = static_cast<int>(b.size());
    for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<int> act, fr;
        for (int i = 0; i < n; ++i) ((mask >> i) & 1 ? act : fr).push_back(i);
        Eigen::VectorXd u = phi;
        if (!fr.empty()) {
            Eigen::MatrixXd Aff(fr.size(), fr.size());
            Eigen::VectorXd rhs(fr.size());
            for (std::size_t a = 0; a < fr.size(); ++a) {
                rhs[a] = b[fr[a]];
                for (int j : act) rhs[a] -= A(fr[a], j) * phi[j];
                for (std::size_t c = 0; c < fr.size(); ++c) Aff(a, c) = A(fr[a], fr[c]);
            }
            const Eigen::VectorXd uf = Aff.fullPivLu().solve(rhs);
            for (std::size_t a = 0; a < fr.size(); ++a) u[fr[a]] = uf[a];
        }
        const Eigen::VectorXd r = A * u - b;
        bool ok = true;
        for (int i : fr) ok = ok && u[i] >= phi[i] - 1e-13;
        for (int i : act) ok = ok && r[i] >= -1e-13;
        if (ok) return std::vector<double>(u.data(), u.data() + n);
    }
    return {};
}

}  // namespace

TEST(Psor, MatchesActiveSetEnumeration) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                if (i != j) A(i, j) = -0.2 * U(rng);
        for (int i = 0; i < 8; ++i) A(i, i) = -A.row(i).sum() + 0.1 + U(rng);
        Eigen::VectorXd b(8), phi(8);
        for (int i = 0; i < 8; ++i) {
            b[i] = U(rng) - 0.5;
            phi[i] = U(rng) - 0.5;
        }
        EXPECT_EQ(m_matrix_defect(A), 0.0);
        const auto oracle = enumerate_lcp(A, b, phi);
        ASSERT_EQ(oracle.size(), 8u);
        LCPStep step;
        step.A = &A;
        step.b = std::span<const double>(b.data(), 8);
        step.phi = std::span<const double>(phi.data(), 8);
        step.tol = 1e-13;
        const auto res = psor_solve(step);
        for (int i = 0; i < 8; ++i) EXPECT_NEAR(res.u[i], oracle[i], 1e-11);
        EXPECT_LE(res.residual, 1e-13);
    }
}

TEST(Psor, InactiveObstacleGivesUnconstrainedSolve) {
    GridSpec g = coarse_grid();
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    Eigen::MatrixXd A = g.dt * op.matrix();
    A.diagonal().array() += 1.0;
    Eigen::VectorXd b(g.n_points);
    for (std::size_t i = 0; i < g.n_points; ++i) b[static_cast<Eigen::Index>(i)] = std::cos(g.x(i));
    std::vector<double> phi(g.n_points, -1e9);
    LCPStep step;
    step.A = &A;
    step.b = std::span<const double>(b.data(), g.n_points);
    step.phi = phi;
    const auto res = psor_solve(step);
    const Eigen::VectorXd x = A.llt().solve(b);
    for (std::size_t i = 0; i < g.n_points; ++i) EXPECT_NEAR(res.u[i], x[static_cast<Eigen::Index>(i)], 1e-9);
}

TEST(Psor, IdentityMatrixProjects) {
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(5, 5);
    const std::vector<double> b{0.1, -0.3, 0.2, 0.0, -1.0}, phi{0.5, 0.5, 0.3, 0.1, 0.0};
    LCPStep step;
    step.A = &A;
    step.b = b;
    step.phi = phi;
    const auto res = psor_solve(step);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(res.u[i], phi[i]);
}

TEST(Psor, SweepLimitRaisesConvergenceError) {
    GridSpec g = coarse_grid();
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    Eigen::MatrixXd A = 10.0 * op.matrix();
    A.diagonal().array() += 1.0;
    std::vector<double> b(g.n_points, 1.0), phi(g.n_points, 0.0);
    LCPStep step;
    step.A = &A;
    step.b = b;
    step.phi = phi;
    step.max_sweeps = 1;
    step.tol = 1e-14;
    try {
        psor_solve(step);
        FAIL();
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::convergence);
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(SolveObstacle, FeasibleMonotoneComplementary) {
    GridSpec g = coarse_grid();
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto ob = bump(g);
    ProjectedConfig pc;
    pc.dt = g.dt;
    const auto traj = solve_obstacle(op, g, ob, pc);
    ASSERT_TRUE(traj.valid);
    EXPECT_EQ(traj.levels(), 33u);
    for (std::size_t i = 0; i < traj.nodes(); ++i) EXPECT_EQ(traj.u[0][i], traj.phi[i]);
    for (std::size_t k = 1; k < traj.levels(); ++k) {
        EXPECT_LE(traj.residual[k - 1], 1e-10);
        for (std::size_t i = 0; i < traj.nodes(); ++i) {
            EXPECT_GE(traj.u[k][i], traj.phi[i]);
            EXPECT_GE(traj.u[k][i], traj.u[k - 1][i] - 1e-12);
        }
    }
}

TEST(ComparisonTest, NestedObstacles) {
    GridSpec g = coarse_grid();
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto phi = bump(g);
    ProjectedConfig pc;
    pc.dt = g.dt;
    const auto same = comparison_test(op, g, phi, phi, pc);
    EXPECT_TRUE(same.pass);
    EXPECT_EQ(same.max_violation, 0.0);
    EXPECT_TRUE(comparison_test(op, g, phi, phi.raised(0.1), pc).pass);
    EXPECT_TRUE(comparison_test(op, g, phi, bump(g, 1.0, 1.5), pc).pass);
    EXPECT_THROW(comparison_test(op, g, bump(g, 1.0, 1.5), phi, pc), Error);
}
