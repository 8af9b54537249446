#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "nlobs/implicit_system.hpp"
#include "nlobs/nonlocal_operator.hpp"
#include "nlobs/obstacle.hpp"
#include "nlobs/regression.hpp"

namespace nlobs {

/// e^{-z/epsilon}, flushed to zero below 1e-300.
double beta(double z, double epsilon);

enum class PenalizedScheme { imex, explicit_euler };

struct PenalizedConfig {
    double epsilon = 1e-2;
    double dt = 1.0 / 256.0;
    PenalizedScheme scheme = PenalizedScheme::imex;
    double linear_tol = 1e-13;
    int max_newton = 100;
    double newton_tol = 1e-15;
};

/// Largest explicit step that keeps forward Euler monotone:
/// 1 / (max diag L + max{1, |L phi|_inf} / epsilon).
double stability_limit(const DiscreteOperator& op, std::span<const double> Lphi, double epsilon);

/// Lower slack epsilon * ln^+ |L phi|_inf for u - phi.
double penalized_slack(std::span<const double> Lphi, double epsilon);

/// One penalized step at a time. The imex step solves
/// (I + dt L) u^{k+1} = u^k + dt beta(u^{k+1} - phi).
/// The predictor solves z* = z + dt beta(z*) per node by Newton, then
/// (I + dt L) u = u^k + dt beta(u* - phi); nonlinear Jacobi sweeps with a
/// scalar Newton solve per node then remove the splitting error.
class PenalizedStepper {
public:
    static constexpr int max_jacobi_sweeps = 500;

    PenalizedStepper(const DiscreteOperator& op, const GridSpec& grid, const ObstacleSpec& obstacle,
                     const PenalizedConfig& cfg);

    FieldSnapshot step(const FieldSnapshot& state) const;
    const PenalizedConfig& config() const { return cfg_; }
    double stability() const { return stability_; }
    const std::vector<double>& phi() const { return phi_; }
    const std::vector<double>& Lphi() const { return lphi_; }

private:
    const DiscreteOperator* op_;
    PenalizedConfig cfg_;
    std::vector<double> phi_;
    std::vector<double> lphi_;
    double stability_ = 0.0;
    std::unique_ptr<ImplicitSystem> system_;
};

FieldSnapshot step_penalized(const FieldSnapshot& state, const PenalizedConfig& cfg,
                             const DiscreteOperator& op, const GridSpec& grid,
                             const ObstacleSpec& obstacle);

Trajectory solve_penalized(const DiscreteOperator& op, const GridSpec& grid,
                           const ObstacleSpec& obstacle, const PenalizedConfig& cfg);
Trajectory solve_penalized(const GridSpec& grid, const KernelSpec& kernel,
                           const ObstacleSpec& obstacle, const PenalizedConfig& cfg,
                           const OperatorOptions& options = {});

/// sup |a - b| over t in [t1, t2] and all nodes; trajectories must share the grid.
/// When b is on a grid with twice as many steps per unit time it is subsampled.
double sup_gap(const Trajectory& a, const Trajectory& b, double t1, double t2);

struct EpsilonRow {
    double epsilon = 0.0;
    double dt = 0.0;
    double gap_next = 0.0;       // to the next (smaller) epsilon; NaN for the last row
    double gap_reference = 0.0;  // to the projected solution
    double constant = 0.0;       // gap_reference / sqrt(epsilon)
};

struct EpsilonStudy {
    std::vector<EpsilonRow> rows;
    bool monotone_next = false;
    bool monotone_reference = false;
    /// gap_reference ~ C (sqrt eps)^order
    LineFit order;
    bool pass = false;
};

struct EpsilonStudyOptions {
    double t1 = 0.2;
    double t2 = 0.8;
    double order_lo = 0.5;
    double order_hi = 1.5;
    PenalizedConfig base;
};

/// Runs the penalized solver for each epsilon (strictly decreasing, at
/// least three) and compares against `reference` (a projected run).
EpsilonStudy epsilon_study(const DiscreteOperator& op, const GridSpec& grid,
                           const ObstacleSpec& obstacle, const std::vector<double>& epsilons,
                           const Trajectory& reference, const EpsilonStudyOptions& options = {});

}  // namespace nlobs
