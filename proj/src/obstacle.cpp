#include "nlobs/obstacle.hpp"

#include <algorithm>
#include <cmath>

#include "nlobs/error.hpp"

namespace nlobs {

ObstacleSpec::ObstacleSpec(ObstacleFamily family, std::vector<Bump> bumps)
    : family_(family), bumps_(std::move(bumps)) {}

double ObstacleSpec::phi(double x) const {
    double sum = offset_;
    for (const auto& b : bumps_) {
        const double z = (x - b.center) / b.r;
        if (std::abs(z) < 1.0) {
            const double q = 1.0 - z * z;
            sum += b.A * q * q * q;
        }
    }
    return sum;
}

double ObstacleSpec::dphi(double x) const {
    double sum = 0.0;
    for (const auto& b : bumps_) {
        const double z = (x - b.center) / b.r;
        if (std::abs(z) < 1.0) {
            const double q = 1.0 - z * z;
            sum += -6.0 * b.A * z * q * q / b.r;
        }
    }
    return sum;
}

double ObstacleSpec::d2phi(double x) const {
    double sum = 0.0;
    for (const auto& b : bumps_) {
        const double z = (x - b.center) / b.r;
        if (std::abs(z) < 1.0) {
            const double q = 1.0 - z * z;
            sum += 6.0 * b.A * q * (5.0 * z * z - 1.0) / (b.r * b.r);
        }
    }
    return sum;
}

std::vector<double> ObstacleSpec::values(const GridSpec& grid) const {
    std::vector<double> out(grid.n_points);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = phi(grid.x(i));
    return out;
}

const std::vector<double>& ObstacleSpec::Lphi(const DiscreteOperator& op, const GridSpec& grid) const {
    if (lphi_n_ != grid.n_points || lphi_.size() != op.size()) {
        lphi_ = op.apply(values(grid));
        lphi_n_ = grid.n_points;
    }
    return lphi_;
}

double ObstacleSpec::lipschitz_constant() const {
    double lo = 0.0, hi = 0.0;
    for (const auto& b : bumps_) {
        lo = std::min(lo, b.center - b.r);
        hi = std::max(hi, b.center + b.r);
    }
    constexpr int samples = 200000;
    double best = 0.0;
    for (int j = 0; j <= samples; ++j) best = std::max(best, std::abs(dphi(lo + (hi - lo) * j / samples)));
    return best;
}

double ObstacleSpec::sup_norm() const {
    double best = std::abs(offset_);
    for (const auto& b : bumps_) {
        constexpr int samples = 4000;
        for (int j = 0; j <= samples; ++j)
            best = std::max(best, std::abs(phi(b.center - b.r + 2.0 * b.r * j / samples)));
    }
    return best;
}

ObstacleSpec ObstacleSpec::raised(double offset) const {
    ObstacleSpec o(family_, bumps_);
    o.offset_ = offset_ + offset;
    return o;
}

ObstacleSpec make_obstacle(ObstacleFamily family, std::vector<Bump> bumps, const GridSpec& grid) {
    if (bumps.empty()) throw Error(ErrorKind::parameter, "obstacle needs at least one bump");
    if (family == ObstacleFamily::cubic_bump && bumps.size() != 1)
        throw Error(ErrorKind::parameter, "cubic_bump takes exactly one bump; use sum_of_bumps");
    for (const auto& b : bumps) {
        if (!(b.A > 0.0)) throw Error(ErrorKind::parameter, "bump amplitude A must be positive");
        if (!(b.r > 0.0)) throw Error(ErrorKind::parameter, "bump radius r must be positive");
        if (!(std::abs(b.center) + b.r < grid.R_dom))
            throw Error(ErrorKind::geometry, "bump support touches the domain boundary");
    }
    return ObstacleSpec(family, std::move(bumps));
}

FieldSnapshot initial_state(const ObstacleSpec& obstacle, const GridSpec& grid, double epsilon) {
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::parameter, "epsilon must be nonnegative");
    FieldSnapshot snap;
    snap.u = obstacle.values(grid);
    const double lift = std::sqrt(epsilon);
    for (double& v : snap.u) v += lift;
    return snap;
}

double weighted_l1s_norm(std::span<const double> field, const GridSpec& grid, double s) {
    if (field.size() != grid.n_points)
        throw Error(ErrorKind::shape, "field length does not match the grid");
    const double h = grid.spacing();
    const double p = static_cast<double>(grid.dim) + 2.0 * s;
    double sum = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double w = (i == 0 || i + 1 == field.size()) && !grid.periodic ? 0.5 : 1.0;
        sum += w * std::abs(field[i]) / (1.0 + std::pow(std::abs(grid.x(i)), p));
    }
    return sum * h;
}

FieldSnapshot Trajectory::snapshot(std::size_t k, const DiscreteOperator* op) const {
    FieldSnapshot s;
    s.t = t[k];
    s.u = u[k];
    s.v.resize(s.u.size());
    for (std::size_t i = 0; i < s.u.size(); ++i) s.v[i] = s.u[i] - phi[i];
    if (op) s.Lu = op->apply(s.u);
    s.ut.assign(s.u.size(), 0.0);
    if (k > 0) {
        const double dt = t[k] - t[k - 1];
        for (std::size_t i = 0; i < s.u.size(); ++i) s.ut[i] = (u[k][i] - u[k - 1][i]) / dt;
    }
    return s;
}

}  // namespace nlobs
