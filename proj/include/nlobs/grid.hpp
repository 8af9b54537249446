#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace nlobs {

/// Uniform space-time grid on [-R_dom, R_dom] x [0, T].
///
/// Non-periodic grids include both endpoints, h = 2 R_dom / (n_points - 1).
/// Periodic grids place n_points nodes on one period of length 2 R_dom,
/// h = 2 R_dom / n_points, x_i = -R_dom + i h.
struct GridSpec {
    int dim = 1;
    double R_dom = 8.0;
    std::size_t n_points = 1025;
    double T = 1.0;
    double dt = 1.0 / 256.0;
    bool periodic = false;

    double spacing() const {
        const double n = static_cast<double>(n_points);
        return periodic ? 2.0 * R_dom / n : 2.0 * R_dom / (n - 1.0);
    }
    double x(std::size_t i) const { return -R_dom + static_cast<double>(i) * spacing(); }
    std::vector<double> nodes() const;

    /// Number of time steps needed to reach T (T is rounded to a multiple of dt).
    std::size_t steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }
    double time(std::size_t k) const { return static_cast<double>(k) * dt; }

    /// Index of the node closest to x.
    std::size_t index_of(double xv) const;

    /// Half-height of the parabolic cylinder Q_r = B_r x (t - r^{2s}, t + r^{2s}).
    static double cylinder_half_height(double r, double s) { return std::pow(r, 2.0 * s); }

    /// Same physics at half the spacing and half the time step.
    GridSpec refined() const;

    /// Throws Error(parameter) when an invariant fails.
    void validate() const;
};

}  // namespace nlobs
