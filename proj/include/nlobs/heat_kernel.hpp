#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nlobs/grid.hpp"
#include "nlobs/nonlocal_operator.hpp"
#include "nlobs/obstacle.hpp"

namespace nlobs {

/// Density of the symmetric stable law with characteristic function
/// exp(-|xi|^alpha), 0 < alpha <= 1, evaluated by quadrature of either the
/// Fourier integral or its rotated-contour (Laplace) form, whichever is
/// less oscillatory at y.
double stable_density(double y, double alpha);
/// Upper tail mass: integral of the density over [y, infinity), y >= 0.
double stable_tail(double y, double alpha);
/// Leading far-field coefficient: density ~ coefficient * |y|^{-1-alpha}.
double stable_tail_coefficient(double alpha);

enum class KernelConstruction { spectral, evolved };

/// Heat kernel p_t of d/dt + L sampled at grid nodes. `weights[m]` is the
/// kernel mass assigned to offset m (|m| < n), symmetric in m; convolution
/// uses them directly.
struct HeatKernelSample {
    double t = 0.0;
    double s = 0.25;
    GridSpec grid;
    KernelConstruction construction = KernelConstruction::spectral;
    std::vector<double> values;
    std::vector<double> weights;

    /// Trapezoid integral of the sampled values.
    double mass() const;
};

struct HeatKernelOptions {
    /// Upper bound on the far-field value c t R_dom^{-1-2s} at the domain edge.
    double tail_tol = 1e-6;
    bool with_weights = true;
};

/// Fractional heat kernel p_t(x) = t^{-1/2s} p_1(x t^{-1/2s}) from the
/// symbol exp(-t |xi|^{2s}). Throws Error(domain) when the far field at
/// R_dom exceeds tail_tol; the message carries the required R_dom.
HeatKernelSample fractional_heat_kernel(double s, double t, const GridSpec& grid,
                                        const HeatKernelOptions& options = {});

/// Kernel for a general operator: implicit Euler from a unit-mass delta
/// spread over three cells. Requires t >= 10 dt.
HeatKernelSample evolved_heat_kernel(const DiscreteOperator& op, const GridSpec& grid, double t,
                                     double dt);

struct BoundFit {
    double t = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    bool valid = false;  // 0 < c1 <= c2 < infinity
};

/// c1, c2 = min, max over nodes of p_t / min{t^{-1/2s}, t |x|^{-1-2s}}.
BoundFit kernel_bound_fit(const HeatKernelSample& sample);

struct BoundStability {
    std::vector<BoundFit> fits;
    double ratio_min = 0.0;  // min over t of c2/c1
    double ratio_max = 0.0;
    bool pass = false;
};

/// Passes iff every fit is valid and c2/c1 varies by at most `tolerance`
/// relative to its smallest value.
BoundStability kernel_bound_stability(std::vector<BoundFit> fits, double tolerance = 0.2);

/// Far-field profile p_t(x) |x|^{1+2s} / t at the given nodes.
std::vector<double> tail_profile(const HeatKernelSample& sample, std::span<const std::size_t> nodes);

/// (p_t * f)(x_i) = sum_j weights[|i - j|] f_j, zero outside the grid.
std::vector<double> convolve(const HeatKernelSample& sample, std::span<const double> f);

/// Source term f(x, t) written into `out` (grid-sized).
using SourceFn = std::function<void(double t, std::span<double> out)>;

struct DuhamelOptions {
    std::vector<double> output_times;
    /// Time quadrature step for the source integral (midpoint rule).
    double dt = 1.0 / 64.0;
    HeatKernelOptions kernel;
    /// When set and not fractional, evolved kernels are used instead.
    const DiscreteOperator* op = nullptr;
    double evolve_dt = 1.0 / 1024.0;
};

/// Solution of (d/dt + L) u = f, u(0) = initial, by the Duhamel formula at
/// the requested output times (time 0 is always included).
Trajectory duhamel_solve(std::span<const double> initial, const SourceFn& rhs, double s,
                         const GridSpec& grid, const DuhamelOptions& options);

struct TailGradient {
    std::vector<double> times;
    std::vector<double> sup_gradient;  // per time, over |x| > r0
    double max = 0.0;
    double median = 0.0;
    bool pass = false;  // max <= 2 median
};

/// Central-difference gradient of p_t outside B_{r0} across a t sample.
TailGradient tail_gradient_check(double s, std::span<const double> times, const GridSpec& grid,
                                 double r0, const HeatKernelOptions& options = {});

struct BarrierResult {
    double delta = 0.0;
    double ratio_min = 0.0;  // over |x| in (2, R_dom/2) and the t sample
    double ratio_max = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
    double doubling_min = 0.0;  // b(x, 2t) / b(x, t) at far |x|
    double doubling_max = 0.0;
    bool pass = false;
};

/// Evolves b0 = normalized indicator of B_1 with source
/// delta max{|x|, 1}^{-1-2s} and checks that b / (t |x|^{-1-2s}) stays in the
/// band [band_lo, band_hi] over |x| in (2, R_dom/2).
BarrierResult barrier_check(double s, const GridSpec& grid, double delta, double band_lo,
                            double band_hi, std::span<const double> times);

}  // namespace nlobs
