#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nlobs/nonlocal_operator.hpp"
#include "nlobs/obstacle.hpp"

namespace nlobs {

/// One linear complementarity problem: find u >= phi with A u - b >= 0 and
/// (u - phi) . (A u - b) = 0.
struct LCPStep {
    const Eigen::MatrixXd* A = nullptr;
    std::span<const double> b;
    std::span<const double> phi;
    double omega = 1.5;
    double tol = 1e-10;
    std::size_t max_sweeps = 10000;
    /// Optional starting point; defaults to max(b, phi).
    std::span<const double> initial;
};

struct LCPResult {
    std::vector<double> u;
    std::size_t sweeps = 0;
    double residual = 0.0;  // max_i |min(A u - b, u - phi)_i|
};

/// Largest violation of the M-matrix sign pattern (positive off-diagonal
/// entries or non-positive diagonal); zero for a valid matrix.
double m_matrix_defect(const Eigen::MatrixXd& A);

/// max_i |min((A u - b)_i, u_i - phi_i)|
double complementarity_residual(const Eigen::MatrixXd& A, std::span<const double> b,
                                std::span<const double> phi, std::span<const double> u);

/// Projected SOR. Throws ConvergenceError when max_sweeps is exhausted.
LCPResult psor_solve(const LCPStep& step);

struct ProjectedConfig {
    double dt = 1.0 / 256.0;
    double omega = 1.5;
    /// Tolerance on the parabolic residual (u^{k+1} - u^k)/dt + L u^{k+1},
    /// relative to scale = max(1, |phi|_inf).
    double tol = 1e-10;
    std::size_t max_sweeps = 10000;
};

/// Implicit Euler for min{u_t + L u, u - phi} = 0 with u(., 0) = phi.
Trajectory solve_obstacle(const DiscreteOperator& op, const GridSpec& grid,
                          const ObstacleSpec& obstacle, const ProjectedConfig& cfg = {});
Trajectory solve_obstacle(const GridSpec& grid, const KernelSpec& kernel,
                          const ObstacleSpec& obstacle, const ProjectedConfig& cfg = {},
                          const OperatorOptions& options = {});

struct ComparisonResult {
    bool pass = false;
    double max_violation = 0.0;  // max (u - v) over nodes and times
    double scale = 1.0;
};

/// Projected runs for phi <= psi; passes iff u <= v within 1e-8 * scale.
ComparisonResult comparison_test(const DiscreteOperator& op, const GridSpec& grid,
                                 const ObstacleSpec& phi, const ObstacleSpec& psi,
                                 const ProjectedConfig& cfg = {});

}  // namespace nlobs
