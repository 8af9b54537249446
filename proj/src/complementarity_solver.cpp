#include "nlobs/complementarity_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlobs/error.hpp"
#include "nlobs/implicit_system.hpp"

namespace nlobs {

double m_matrix_defect(const Eigen::MatrixXd& A) {
    double defect = 0.0;
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            if (i == j)
                defect = std::max(defect, -A(i, i) + (A(i, i) > 0.0 ? 0.0 : 1.0));
            else
                defect = std::max(defect, A(i, j));
        }
    return defect;
}

double complementarity_residual(const Eigen::MatrixXd& A, std::span<const double> b,
                                std::span<const double> phi, std::span<const double> u) {
    const auto n = static_cast<Eigen::Index>(u.size());
    const Eigen::VectorXd r =
        A * Eigen::Map<const Eigen::VectorXd>(u.data(), n) - Eigen::Map<const Eigen::VectorXd>(b.data(), n);
    double res = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        res = std::max(res, std::abs(std::min(r[i], u[iu] - phi[iu])));
    }
    return res;
}

LCPResult psor_solve(const LCPStep& step) {
    if (!step.A) throw Error(ErrorKind::parameter, "LCP step has no matrix");
    const Eigen::MatrixXd& A = *step.A;
    const std::size_t n = step.b.size();
    if (static_cast<std::size_t>(A.rows()) != n || static_cast<std::size_t>(A.cols()) != n ||
        step.phi.size() != n || (!step.initial.empty() && step.initial.size() != n))
        throw Error(ErrorKind::shape, "LCP dimensions do not agree");
    if (!(step.omega > 0.0 && step.omega < 2.0))
        throw Error(ErrorKind::parameter, "relaxation factor must lie in (0, 2)");
    for (std::size_t i = 0; i < n; ++i)
        if (!(A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) > 0.0))
            throw Error(ErrorKind::parameter, "LCP matrix needs a positive diagonal");

    // rows of A as contiguous columns of A^T
    const Eigen::MatrixXd At = A.transpose();
    LCPResult out;
    out.u.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.u[i] = step.initial.empty() ? std::max(step.b[i], step.phi[i]) : std::max(step.initial[i], step.phi[i]);
    Eigen::Map<Eigen::VectorXd> u(out.u.data(), static_cast<Eigen::Index>(n));

    for (std::size_t sweep = 1; sweep <= step.max_sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double aii = At(ii, ii);
            const double r = step.b[i] - At.col(ii).dot(u);
            const double target = std::max(step.phi[i], out.u[i] + step.omega * r / aii);
            change = std::max(change, std::abs(target - out.u[i]) * aii);
            out.u[i] = target;
        }
        if (change <= step.tol) {
            out.residual = complementarity_residual(A, step.b, step.phi, out.u);
            out.sweeps = sweep;
            if (out.residual <= step.tol) return out;
        }
    }
    out.residual = complementarity_residual(A, step.b, step.phi, out.u);
    throw ConvergenceError(out.residual, "PSOR exceeded " + std::to_string(step.max_sweeps) +
                                             " sweeps; residual " + std::to_string(out.residual));
}

Trajectory solve_obstacle(const DiscreteOperator& op, const GridSpec& grid,
                          const ObstacleSpec& obstacle, const ProjectedConfig& cfg) {
    if (op.size() != grid.n_points) throw Error(ErrorKind::shape, "operator and grid sizes differ");
    if (op.size() > ImplicitSystem::dense_limit)
        throw Error(ErrorKind::unsupported, "projected solver needs a dense system");
    ImplicitSystem system(op, cfg.dt);
    const Eigen::MatrixXd& A = system.matrix();
    Trajectory traj;
    traj.grid = grid;
    traj.grid.dt = cfg.dt;
    traj.s = op.kernel().s;
    traj.phi = obstacle.values(grid);
    double scale = 1.0;
    for (double p : traj.phi) scale = std::max(scale, std::abs(p));
    const std::size_t n = grid.n_points;
    const std::size_t steps = static_cast<std::size_t>(std::llround(grid.T / cfg.dt));
    traj.t.push_back(0.0);
    traj.u.push_back(traj.phi);
    std::vector<double> guess(n);
    for (std::size_t k = 1; k <= steps; ++k) {
        const auto& prev = traj.u.back();
        system.solve(prev, guess);
        LCPStep lcp;
        lcp.A = &A;
        lcp.b = prev;
        lcp.phi = traj.phi;
        lcp.omega = cfg.omega;
        // residual of A u - b equals dt times the parabolic residual
        lcp.tol = cfg.tol * scale * cfg.dt;
        lcp.max_sweeps = cfg.max_sweeps;
        lcp.initial = guess;
        LCPResult res;
        try {
            res = psor_solve(lcp);
        } catch (const Error& e) {
            traj.valid = false;
            traj.failure = e.what();
            break;
        }
        double dmin = res.u[0] - traj.phi[0];
        for (std::size_t i = 0; i < n; ++i) dmin = std::min(dmin, res.u[i] - traj.phi[i]);
        traj.residual.push_back(res.residual / cfg.dt);
        traj.min_detachment.push_back(dmin);
        traj.t.push_back(static_cast<double>(k) * cfg.dt);
        traj.u.push_back(std::move(res.u));
    }
    return traj;
}

Trajectory solve_obstacle(const GridSpec& grid, const KernelSpec& kernel, const ObstacleSpec& obstacle,
                          const ProjectedConfig& cfg, const OperatorOptions& options) {
    const auto op = build_discrete_operator(kernel, grid, options);
    return solve_obstacle(op, grid, obstacle, cfg);
}

ComparisonResult comparison_test(const DiscreteOperator& op, const GridSpec& grid,
                                 const ObstacleSpec& phi, const ObstacleSpec& psi,
                                 const ProjectedConfig& cfg) {
    const auto pv = phi.values(grid), qv = psi.values(grid);
    for (std::size_t i = 0; i < pv.size(); ++i)
        if (pv[i] > qv[i]) throw Error(ErrorKind::parameter, "comparison test needs phi <= psi");
    const auto u = solve_obstacle(op, grid, phi, cfg);
    const auto v = solve_obstacle(op, grid, psi, cfg);
    ComparisonResult out;
    for (double p : qv) out.scale = std::max(out.scale, std::abs(p));
    out.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < std::min(u.levels(), v.levels()); ++k)
        for (std::size_t i = 0; i < u.nodes(); ++i) out.max_violation = std::max(out.max_violation, u.u[k][i] - v.u[k][i]);
    out.pass = u.valid && v.valid && out.max_violation <= 1e-8 * out.scale;
    return out;
}

}  // namespace nlobs
