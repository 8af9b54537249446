#include "nlobs/penalized_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nlobs/error.hpp"
#include "nlobs/parallel.hpp"

namespace nlobs {

double beta(double z, double epsilon) {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::parameter, "epsilon must be positive");
    const double e = -z / epsilon;
    if (e < -690.0) return 0.0;
    const double b = std::exp(std::min(e, 700.0));
    return b < 1e-300 ? 0.0 : b;
}

double stability_limit(const DiscreteOperator& op, std::span<const double> Lphi, double epsilon) {
    double lsup = 0.0;
    for (double v : Lphi) lsup = std::max(lsup, std::abs(v));
    return 1.0 / (op.max_diagonal() + std::max(1.0, lsup) / epsilon);
}

double penalized_slack(std::span<const double> Lphi, double epsilon) {
    double lsup = 0.0;
    for (double v : Lphi) lsup = std::max(lsup, std::abs(v));
    return epsilon * std::max(0.0, std::log(lsup));
}

PenalizedStepper::PenalizedStepper(const DiscreteOperator& op, const GridSpec& grid,
                                   const ObstacleSpec& obstacle, const PenalizedConfig& cfg)
    : op_(&op), cfg_(cfg), phi_(obstacle.values(grid)), lphi_(op.apply(phi_)) {
    if (!(cfg.epsilon > 0.0)) throw Error(ErrorKind::parameter, "epsilon must be positive");
    if (!(cfg.dt > 0.0)) throw Error(ErrorKind::parameter, "dt must be positive");
    if (op.size() != grid.n_points) throw Error(ErrorKind::shape, "operator and grid sizes differ");
    stability_ = stability_limit(op, lphi_, cfg.epsilon);
    if (cfg.scheme == PenalizedScheme::imex) {
        system_ = std::make_unique<ImplicitSystem>(op, cfg.dt, cfg.linear_tol);
    } else if (cfg.dt > stability_) {
        throw Error(ErrorKind::stability, "explicit step " + std::to_string(cfg.dt) +
                                              " exceeds the stability limit " + std::to_string(stability_));
    }
}

FieldSnapshot PenalizedStepper::step(const FieldSnapshot& state) const {
    const std::size_t n = phi_.size();
    if (state.u.size() != n) throw Error(ErrorKind::shape, "state length does not match the grid");
    const double dt = cfg_.dt, eps = cfg_.epsilon;
    FieldSnapshot next;
    next.t = state.t + dt;
    next.u.resize(n);
    if (cfg_.scheme == PenalizedScheme::explicit_euler) {
        const auto Lu = op_->apply(state.u);
        for (std::size_t i = 0; i < n; ++i)
            next.u[i] = state.u[i] + dt * (-Lu[i] + beta(state.u[i] - phi_[i], eps));
        return next;
    }
    auto scalar_newton = [&](double v, double a, double rhs, double& out) {
        // a v - dt beta(v) = rhs; concave increasing, so Newton converges monotonically
        for (int it = 0; it < cfg_.max_newton; ++it) {
            const double b = beta(v, eps);
            const double dv = -(a * v - dt * b - rhs) / (a + dt * b / eps);
            v += dv;
            if (!std::isfinite(v)) return false;
            if (std::abs(dv) <= cfg_.newton_tol * (1.0 + std::abs(v))) {
                out = v;
                return true;
            }
        }
        return false;
    };
    std::vector<double> ustar(n);
    std::vector<int> failed(n, 0);
    parallel_for(0, n, [&](std::size_t i) {
        const double z = state.u[i] - phi_[i];
        double y = z;
        failed[i] = scalar_newton(z, 1.0, z, y) ? 0 : 1;
        ustar[i] = phi_[i] + y;
    });
    for (std::size_t i = 0; i < n; ++i)
        if (failed[i]) throw StepError(i, "penalty Newton iteration failed at node " + std::to_string(i));
    system_->solve(ustar, next.u);

    // nonlinear Jacobi on (I + dt L) u - dt beta(u - phi) = u^k, from the split predictor
    std::vector<double> Lu(n), trial(n);
    double change = std::numeric_limits<double>::infinity();
    int sweep = 0;
    for (; sweep < max_jacobi_sweeps && change > 0.0; ++sweep) {
        op_->apply(next.u, Lu);
        double scale = 1.0;
        for (double v : next.u) scale = std::max(scale, std::abs(v));
        parallel_for(0, n, [&](std::size_t i) {
            const double a = 1.0 + dt * op_->diagonal(i);
            const double rhs = state.u[i] + dt * (op_->diagonal(i) * next.u[i] - Lu[i]) - a * phi_[i];
            double v = next.u[i] - phi_[i];
            failed[i] = scalar_newton(v, a, rhs, v) ? 0 : 1;
            trial[i] = phi_[i] + v;
        });
        for (std::size_t i = 0; i < n; ++i)
            if (failed[i]) throw StepError(i, "penalty Newton iteration failed at node " + std::to_string(i));
        change = 0.0;
        for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(trial[i] - next.u[i]));
        next.u.swap(trial);
        if (change <= cfg_.linear_tol * scale) break;
    }
    if (sweep == max_jacobi_sweeps)
        throw ConvergenceError(change, "implicit penalty iteration did not converge");
    return next;
}

FieldSnapshot step_penalized(const FieldSnapshot& state, const PenalizedConfig& cfg,
                             const DiscreteOperator& op, const GridSpec& grid,
                             const ObstacleSpec& obstacle) {
    return PenalizedStepper(op, grid, obstacle, cfg).step(state);
}

Trajectory solve_penalized(const DiscreteOperator& op, const GridSpec& grid,
                           const ObstacleSpec& obstacle, const PenalizedConfig& cfg) {
    PenalizedStepper stepper(op, grid, obstacle, cfg);
    Trajectory traj;
    traj.grid = grid;
    traj.grid.dt = cfg.dt;
    traj.s = op.kernel().s;
    traj.epsilon = cfg.epsilon;
    traj.phi = stepper.phi();
    FieldSnapshot state = initial_state(obstacle, grid, cfg.epsilon);
    const std::size_t steps = static_cast<std::size_t>(std::llround(grid.T / cfg.dt));
    traj.t.reserve(steps + 1);
    traj.u.reserve(steps + 1);
    traj.t.push_back(0.0);
    traj.u.push_back(state.u);
    for (std::size_t k = 1; k <= steps; ++k) {
        try {
            state = stepper.step(state);
        } catch (const Error& e) {
            traj.valid = false;
            traj.failure = e.what();
            break;
        }
        state.t = static_cast<double>(k) * cfg.dt;
        double bmax = 0.0, dmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < state.u.size(); ++i) {
            const double z = state.u[i] - traj.phi[i];
            bmax = std::max(bmax, beta(z, cfg.epsilon));
            dmin = std::min(dmin, z);
        }
        traj.max_beta.push_back(bmax);
        traj.min_detachment.push_back(dmin);
        traj.t.push_back(state.t);
        traj.u.push_back(state.u);
    }
    return traj;
}

Trajectory solve_penalized(const GridSpec& grid, const KernelSpec& kernel,
                           const ObstacleSpec& obstacle, const PenalizedConfig& cfg,
                           const OperatorOptions& options) {
    const auto op = build_discrete_operator(kernel, grid, options);
    return solve_penalized(op, grid, obstacle, cfg);
}

double sup_gap(const Trajectory& a, const Trajectory& b, double t1, double t2) {
    if (a.nodes() != b.nodes()) throw Error(ErrorKind::shape, "trajectories live on different grids");
    double gap = 0.0;
    std::size_t j = 0;
    for (std::size_t k = 0; k < a.levels(); ++k) {
        const double t = a.t[k];
        if (t < t1 - 1e-12 || t > t2 + 1e-12) continue;
        while (j + 1 < b.levels() && b.t[j] < t - 1e-12) ++j;
        if (std::abs(b.t[j] - t) > 1e-9) continue;
        for (std::size_t i = 0; i < a.nodes(); ++i) gap = std::max(gap, std::abs(a.u[k][i] - b.u[j][i]));
    }
    return gap;
}

EpsilonStudy epsilon_study(const DiscreteOperator& op, const GridSpec& grid,
                           const ObstacleSpec& obstacle, const std::vector<double>& epsilons,
                           const Trajectory& reference, const EpsilonStudyOptions& options) {
    if (epsilons.size() < 3) throw Error(ErrorKind::parameter, "epsilon study needs at least three values");
    for (std::size_t j = 1; j < epsilons.size(); ++j)
        if (!(epsilons[j] < epsilons[j - 1]))
            throw Error(ErrorKind::parameter, "epsilon list must be strictly decreasing");
    EpsilonStudy study;
    std::vector<Trajectory> runs;
    for (double eps : epsilons) {
        PenalizedConfig cfg = options.base;
        cfg.epsilon = eps;
        runs.push_back(solve_penalized(op, grid, obstacle, cfg));
        EpsilonRow row;
        row.epsilon = eps;
        row.dt = cfg.dt;
        row.gap_reference = sup_gap(runs.back(), reference, options.t1, options.t2);
        row.constant = row.gap_reference / std::sqrt(eps);
        study.rows.push_back(row);
    }
    for (std::size_t j = 0; j < runs.size(); ++j)
        study.rows[j].gap_next = j + 1 < runs.size()
                                     ? sup_gap(runs[j], runs[j + 1], options.t1, options.t2)
                                     : std::numeric_limits<double>::quiet_NaN();
    study.monotone_next = true;
    study.monotone_reference = true;
    for (std::size_t j = 1; j < study.rows.size(); ++j) {
        if (!(study.rows[j].gap_reference < study.rows[j - 1].gap_reference)) study.monotone_reference = false;
        if (j + 1 < study.rows.size() && !(study.rows[j].gap_next < study.rows[j - 1].gap_next))
            study.monotone_next = false;
    }
    std::vector<double> xs, ys;
    for (const auto& r : study.rows) {
        xs.push_back(std::sqrt(r.epsilon));
        ys.push_back(r.gap_reference);
    }
    study.order = fit_power_law(xs, ys);
    bool valid = true;
    for (const auto& r : runs) valid = valid && r.valid;
    study.pass = valid && study.monotone_reference &&
                 study.order.within(options.order_lo, options.order_hi);
    return study;
}

}  // namespace nlobs
