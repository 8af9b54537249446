#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlobs/grid.hpp"
#include "nlobs/nonlocal_operator.hpp"

namespace nlobs {

enum class ObstacleFamily { cubic_bump, sum_of_bumps };

/// A(1 - ((x - center)/r)^2)^3 on |x - center| <= r, zero outside.
struct Bump {
    double A = 1.0;
    double r = 1.0;
    double center = 0.0;
};

/// Compactly supported C^{2,1} obstacle built from cubic bumps.
class ObstacleSpec {
public:
    ObstacleSpec() = default;
    ObstacleSpec(ObstacleFamily family, std::vector<Bump> bumps);

    ObstacleFamily family() const { return family_; }
    const std::vector<Bump>& bumps() const { return bumps_; }

    double phi(double x) const;
    double dphi(double x) const;
    double d2phi(double x) const;

    std::vector<double> values(const GridSpec& grid) const;
    /// L phi on the grid of `op`, computed on first use and cached.
    const std::vector<double>& Lphi(const DiscreteOperator& op, const GridSpec& grid) const;
    /// sup |phi'| by dense sampling of the analytic derivative.
    double lipschitz_constant() const;
    double sup_norm() const;
    /// Same bumps shifted up by a constant (still compared as phi + offset).
    double offset() const { return offset_; }
    ObstacleSpec raised(double offset) const;

private:
    ObstacleFamily family_ = ObstacleFamily::cubic_bump;
    std::vector<Bump> bumps_;
    double offset_ = 0.0;
    mutable std::vector<double> lphi_;
    mutable std::size_t lphi_n_ = 0;
};

/// Validates amplitudes, radii and that every support lies inside (-R_dom, R_dom).
ObstacleSpec make_obstacle(ObstacleFamily family, std::vector<Bump> bumps, const GridSpec& grid);

/// Grid values at one time with optional derived fields.
struct FieldSnapshot {
    double t = 0.0;
    std::vector<double> u;
    std::vector<double> v;
    std::vector<double> Lu;
    std::vector<double> ut;
};

/// u = phi + sqrt(epsilon) at every node, t = 0.
FieldSnapshot initial_state(const ObstacleSpec& obstacle, const GridSpec& grid, double epsilon);

/// Trapezoid rule for the integral of |f(x)| / (1 + |x|^{dim+2s}) over the grid.
double weighted_l1s_norm(std::span<const double> field, const GridSpec& grid, double s);

/// Time-ordered grid values u(x_i, t_k) for k = 0..K.
struct Trajectory {
    GridSpec grid;
    double s = 0.25;
    std::vector<double> phi;
    std::vector<double> t;
    std::vector<std::vector<double>> u;
    std::vector<double> max_beta;        // per step, penalized runs only
    std::vector<double> min_detachment;  // per step: min_i (u - phi)
    std::vector<double> residual;        // per step: complementarity residual (projected runs)
    double epsilon = 0.0;                // 0 for projected runs
    bool valid = true;
    std::string failure;
    std::vector<std::string> warnings;

    std::size_t levels() const { return u.size(); }
    std::size_t nodes() const { return phi.size(); }
    double v(std::size_t k, std::size_t i) const { return u[k][i] - phi[i]; }
    /// Snapshot k with v, Lu (when op given) and backward-difference u_t.
    FieldSnapshot snapshot(std::size_t k, const DiscreteOperator* op = nullptr) const;
};

}  // namespace nlobs
