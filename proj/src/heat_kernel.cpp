#include "nlobs/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "nlobs/error.hpp"
#include "nlobs/implicit_system.hpp"
#include "nlobs/parallel.hpp"
#include "nlobs/quadrature.hpp"

namespace nlobs {
namespace {

constexpr double pi = std::numbers::pi;
constexpr double cutoff = 45.0;  // exp(-45) ~ 3e-20

// Composite Gauss-Legendre over consecutive breakpoints; pieces wider than
// `cap` are split evenly.
template <typename F>
double integrate_breaks(F&& f, const std::vector<double>& breaks, double cap) {
    const auto& gl = quad::GaussLegendre<20>::get();
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
        const double a = breaks[j], b = breaks[j + 1];
        if (!(b > a)) continue;
        const auto pieces = static_cast<std::size_t>(std::ceil((b - a) / cap));
        const double w = (b - a) / static_cast<double>(std::max<std::size_t>(pieces, 1));
        for (std::size_t p = 0; p < std::max<std::size_t>(pieces, 1); ++p)
            sum += gl.integrate(f, a + w * static_cast<double>(p), a + w * static_cast<double>(p + 1));
    }
    return sum;
}

std::vector<double> geometric_breaks(double first, double hi, double map_power = 1.0) {
    std::vector<double> b{0.0};
    for (double r = first;; r *= 2.0) {
        const double v = std::pow(r, map_power);
        if (v >= hi) break;
        b.push_back(v);
    }
    b.push_back(hi);
    return b;
}

struct Forms {
    double alpha, c, sigma, xi_max;
    explicit Forms(double a)
        : alpha(a), c(std::cos(pi * a / 2.0)), sigma(std::sin(pi * a / 2.0)),
          xi_max(std::pow(cutoff, 1.0 / a)) {}

    double laplace_extent(double y) const {
        double w = std::numeric_limits<double>::infinity();
        if (c > 1e-12) w = cutoff / c;
        if (y > 0.0) w = std::min(w, std::pow(cutoff / y, alpha));
        return w;
    }
    double direct_cost(double y) const { return y * xi_max / pi; }
    double laplace_cost(double y) const { return sigma * laplace_extent(y) / pi; }

    std::vector<double> laplace_breaks(double y) const {
        return geometric_breaks(1e-8, laplace_extent(y), alpha);
    }

    // (1/pi) int_0^inf exp(-xi^alpha) cos(xi y) d xi
    double density_direct(double y) const {
        auto f = [&](double xi) { return std::exp(-std::pow(xi, alpha)) * std::cos(xi * y); };
        const double cap = y > 0.0 ? pi / y : std::numeric_limits<double>::infinity();
        return integrate_breaks(f, geometric_breaks(1e-6, xi_max), cap) / pi;
    }
    // rotated contour, in w = r^alpha
    double density_laplace(double y) const {
        const double q = 1.0 / alpha;
        auto f = [&](double w) {
            return std::exp(-y * std::pow(w, q) - c * w) * std::sin(sigma * w) * std::pow(w, q - 1.0);
        };
        return integrate_breaks(f, laplace_breaks(y), pi / sigma) / (pi * alpha);
    }
    // (1/pi) int_0^inf exp(-xi^alpha) sin(xi y) / xi d xi = int_0^y density
    double cdf_direct(double y) const {
        auto f = [&](double xi) { return std::exp(-std::pow(xi, alpha)) * std::sin(xi * y) / xi; };
        const double cap = y > 0.0 ? pi / y : std::numeric_limits<double>::infinity();
        return integrate_breaks(f, geometric_breaks(1e-6, xi_max), cap) / pi;
    }
    double tail_laplace(double y) const {
        const double q = 1.0 / alpha;
        auto f = [&](double w) { return std::exp(-y * std::pow(w, q) - c * w) * std::sin(sigma * w) / w; };
        return integrate_breaks(f, laplace_breaks(y), pi / sigma) / (pi * alpha);
    }
};

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::parameter, "stable index must lie in (0, 1]");
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<double> cell_weights(const Forms& forms, double H, std::size_t count) {
    std::vector<double> w(count, 0.0);
    const auto& gl = quad::GaussLegendre<4>::get();
    parallel_for(0, count, [&](std::size_t m) {
        if (m == 0) {
            w[0] = 1.0 - 2.0 * stable_tail(H / 2.0, forms.alpha);
            return;
        }
        const double a = (static_cast<double>(m) - 0.5) * H, b = a + H;
        if (m <= 8) {
            w[m] = stable_tail(a, forms.alpha) - stable_tail(b, forms.alpha);
        } else {
            w[m] = gl.integrate([&](double y) { return stable_density(y, forms.alpha); }, a, b);
        }
    });
    return w;
}

}  // namespace

double stable_density(double y, double alpha) {
    check_alpha(alpha);
    y = std::abs(y);
    const Forms forms(alpha);
    if (y == 0.0) return std::tgamma(1.0 + 1.0 / alpha) / pi;
    return forms.direct_cost(y) <= forms.laplace_cost(y) ? forms.density_direct(y) : forms.density_laplace(y);
}

double stable_tail(double y, double alpha) {
    check_alpha(alpha);
    if (y < 0.0) return 1.0 - stable_tail(-y, alpha);
    if (y == 0.0) return 0.5;
    const Forms forms(alpha);
    if (y >= 0.5 || forms.laplace_cost(y) <= forms.direct_cost(y)) return forms.tail_laplace(y);
    return 0.5 - forms.cdf_direct(y);
}

double stable_tail_coefficient(double alpha) {
    check_alpha(alpha);
    return std::tgamma(1.0 + alpha) * std::sin(pi * alpha / 2.0) / pi;
}

double HeatKernelSample::mass() const {
    const double h = grid.spacing();
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        sum += (i == 0 || i + 1 == values.size() ? 0.5 : 1.0) * values[i];
    return sum * h;
}

HeatKernelSample fractional_heat_kernel(double s, double t, const GridSpec& grid,
                                        const HeatKernelOptions& options) {
    if (!(s > 0.0 && s <= 0.5)) throw Error(ErrorKind::parameter, "kernel order s must lie in (0, 1/2]");
    if (!(t > 0.0)) throw Error(ErrorKind::parameter, "heat kernel time must be positive");
    if (grid.periodic || grid.n_points % 2 == 0)
        throw Error(ErrorKind::parameter, "heat kernel grids must be non-periodic with a node at x = 0");
    const double alpha = 2.0 * s;
    const double edge = stable_tail_coefficient(alpha) * t * std::pow(grid.R_dom, -1.0 - alpha);
    if (edge > options.tail_tol) {
        const double need =
            std::pow(stable_tail_coefficient(alpha) * t / options.tail_tol, 1.0 / (1.0 + alpha));
        throw Error(ErrorKind::domain, "heat kernel tail at R_dom is " + std::to_string(edge) +
                                           "; requires R_dom >= " + std::to_string(need));
    }
    HeatKernelSample sample;
    sample.t = t;
    sample.s = s;
    sample.grid = grid;
    sample.construction = KernelConstruction::spectral;
    const std::size_t n = grid.n_points, c = (n - 1) / 2;
    const double scale = std::pow(t, -1.0 / alpha);
    const double h = grid.spacing();
    sample.values.assign(n, 0.0);
    parallel_for(c, n, [&](std::size_t i) {
        const double y = static_cast<double>(i - c) * h * scale;
        sample.values[i] = scale * stable_density(y, alpha);
    });
    for (std::size_t i = 0; i < c; ++i) sample.values[i] = sample.values[n - 1 - i];
    if (options.with_weights) sample.weights = cell_weights(Forms(alpha), h * scale, n);
    return sample;
}

HeatKernelSample evolved_heat_kernel(const DiscreteOperator& op, const GridSpec& grid, double t, double dt) {
    if (!(dt > 0.0) || t < 10.0 * dt) throw Error(ErrorKind::parameter, "evolved kernel needs t >= 10 dt");
    if (grid.periodic || grid.n_points % 2 == 0)
        throw Error(ErrorKind::parameter, "heat kernel grids must be non-periodic with a node at x = 0");
    const std::size_t n = grid.n_points, c = (n - 1) / 2;
    const double h = grid.spacing();
    std::vector<double> u(n, 0.0), next(n);
    u[c] = 0.5 / h;
    u[c - 1] = u[c + 1] = 0.25 / h;
    const auto steps = static_cast<std::size_t>(std::llround(t / dt));
    ImplicitSystem system(op, t / static_cast<double>(steps));
    for (std::size_t k = 0; k < steps; ++k) {
        system.solve(u, next);
        u.swap(next);
    }
    HeatKernelSample sample;
    sample.t = t;
    sample.s = op.kernel().s;
    sample.grid = grid;
    sample.construction = KernelConstruction::evolved;
    for (std::size_t i = 0; i < c; ++i) u[i] = u[n - 1 - i] = 0.5 * (u[i] + u[n - 1 - i]);
    sample.values = u;
    sample.weights.assign(n, 0.0);
    for (std::size_t m = 0; m + c < n; ++m) sample.weights[m] = h * u[c + m];
    return sample;
}

BoundFit kernel_bound_fit(const HeatKernelSample& sample) {
    BoundFit fit;
    fit.t = sample.t;
    const double alpha = 2.0 * sample.s, t = sample.t;
    fit.c1 = std::numeric_limits<double>::infinity();
    fit.c2 = 0.0;
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
        const double ax = std::abs(sample.grid.x(i));
        const double on_diag = std::pow(t, -1.0 / alpha);
        const double env = ax > 0.0 ? std::min(on_diag, t * std::pow(ax, -1.0 - alpha)) : on_diag;
        const double r = sample.values[i] / env;
        fit.c1 = std::min(fit.c1, r);
        fit.c2 = std::max(fit.c2, r);
    }
    fit.valid = fit.c1 > 0.0 && fit.c1 <= fit.c2 && std::isfinite(fit.c2);
    return fit;
}

BoundStability kernel_bound_stability(std::vector<BoundFit> fits, double tolerance) {
    BoundStability out;
    out.fits = std::move(fits);
    out.ratio_min = std::numeric_limits<double>::infinity();
    bool valid = !out.fits.empty();
    for (const auto& f : out.fits) {
        valid = valid && f.valid;
        const double r = f.c2 / f.c1;
        out.ratio_min = std::min(out.ratio_min, r);
        out.ratio_max = std::max(out.ratio_max, r);
    }
    out.pass = valid && out.ratio_max <= (1.0 + tolerance) * out.ratio_min;
    return out;
}

std::vector<double> tail_profile(const HeatKernelSample& sample, std::span<const std::size_t> nodes) {
    std::vector<double> out;
    for (std::size_t i : nodes) {
        const double ax = std::abs(sample.grid.x(i));
        out.push_back(sample.values[i] * std::pow(ax, 1.0 + 2.0 * sample.s) / sample.t);
    }
    return out;
}

std::vector<double> convolve(const HeatKernelSample& sample, std::span<const double> f) {
    const std::size_t n = sample.values.size();
    if (f.size() != n) throw Error(ErrorKind::shape, "field length does not match the kernel grid");
    if (sample.weights.size() != n) throw Error(ErrorKind::parameter, "kernel sample has no convolution weights");
    std::vector<double> out(n, 0.0);
    const auto& w = sample.weights;
    parallel_for(0, n, [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += w[i > j ? i - j : j - i] * f[j];
        out[i] = acc;
    });
    return out;
}

Trajectory duhamel_solve(std::span<const double> initial, const SourceFn& rhs, double s,
                         const GridSpec& grid, const DuhamelOptions& options) {
    if (initial.size() != grid.n_points) throw Error(ErrorKind::shape, "initial field does not match the grid");
    if (!(options.dt > 0.0)) throw Error(ErrorKind::parameter, "Duhamel time step must be positive");
    Trajectory traj;
    traj.grid = grid;
    traj.s = s;
    traj.phi.assign(grid.n_points, 0.0);
    traj.t.push_back(0.0);
    traj.u.emplace_back(initial.begin(), initial.end());

    const bool evolved = options.op && options.op->kernel().kind != KernelKind::fractional;
    if (evolved) traj.warnings.push_back("non-fractional kernel: using evolved heat kernels");
    std::map<long long, HeatKernelSample> cache;
    auto kernel_at = [&](double tau) -> const HeatKernelSample& {
        const long long key = std::llround(tau * 1e12);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        HeatKernelSample k = evolved ? evolved_heat_kernel(*options.op, grid, tau,
                                                           std::min(options.evolve_dt, tau / 10.0))
                                     : fractional_heat_kernel(s, tau, grid, options.kernel);
        return cache.emplace(key, std::move(k)).first->second;
    };

    std::vector<double> times = options.output_times;
    std::sort(times.begin(), times.end());
    std::vector<double> f(grid.n_points);
    for (double t : times) {
        if (!(t > 0.0)) continue;
        std::vector<double> u = convolve(kernel_at(t), initial);
        if (rhs) {
            const auto K = static_cast<std::size_t>(std::ceil(t / options.dt - 1e-9));
            const double d = t / static_cast<double>(K);
            for (std::size_t j = 0; j < K; ++j) {
                const double zeta = (static_cast<double>(j) + 0.5) * d;
                rhs(zeta, f);
                const auto part = convolve(kernel_at(t - zeta), f);
                for (std::size_t i = 0; i < u.size(); ++i) u[i] += d * part[i];
            }
        }
        traj.t.push_back(t);
        traj.u.push_back(std::move(u));
    }
    return traj;
}

TailGradient tail_gradient_check(double s, std::span<const double> times, const GridSpec& grid, double r0,
                                 const HeatKernelOptions& options) {
    const double h = grid.spacing();
    if (r0 < 4.0 * h * (1.0 - 1e-12)) throw Error(ErrorKind::parameter, "r0 must be at least 4 h");
    HeatKernelOptions opts = options;
    opts.with_weights = false;
    TailGradient out;
    for (double t : times) {
        const auto sample = fractional_heat_kernel(s, t, grid, opts);
        double g = 0.0;
        for (std::size_t i = 1; i + 1 < sample.values.size(); ++i) {
            if (std::abs(grid.x(i)) <= r0) continue;
            g = std::max(g, std::abs(sample.values[i + 1] - sample.values[i - 1]) / (2.0 * h));
        }
        out.times.push_back(t);
        out.sup_gradient.push_back(g);
    }
    if (!out.sup_gradient.empty()) {
        out.max = *std::max_element(out.sup_gradient.begin(), out.sup_gradient.end());
        out.median = median(out.sup_gradient);
    }
    out.pass = !out.sup_gradient.empty() && std::isfinite(out.max) && out.max <= 2.0 * out.median;
    return out;
}

BarrierResult barrier_check(double s, const GridSpec& grid, double delta, double band_lo, double band_hi,
                            std::span<const double> times) {
    const std::size_t n = grid.n_points;
    std::vector<double> b0(n, 0.0);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(grid.x(i)) < 1.0) ++inside;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(grid.x(i)) < 1.0) b0[i] = 1.0 / (static_cast<double>(inside) * grid.spacing());
    const double p = 1.0 + 2.0 * s;
    SourceFn rhs;
    if (delta != 0.0)
        rhs = [&](double, std::span<double> out) {
            for (std::size_t i = 0; i < n; ++i) out[i] = delta * std::pow(std::max(std::abs(grid.x(i)), 1.0), -p);
        };
    DuhamelOptions opts;
    opts.output_times.assign(times.begin(), times.end());
    opts.dt = 1.0 / 32.0;
    opts.kernel.tail_tol = std::numeric_limits<double>::infinity();
    const auto traj = duhamel_solve(b0, rhs, s, grid, opts);

    BarrierResult out;
    out.delta = delta;
    out.band_lo = band_lo;
    out.band_hi = band_hi;
    out.ratio_min = std::numeric_limits<double>::infinity();
    out.ratio_max = 0.0;
    for (std::size_t k = 1; k < traj.levels(); ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const double ax = std::abs(grid.x(i));
            if (ax <= 2.0 || ax >= grid.R_dom / 2.0) continue;
            const double r = traj.u[k][i] / (traj.t[k] * std::pow(ax, -p));
            out.ratio_min = std::min(out.ratio_min, r);
            out.ratio_max = std::max(out.ratio_max, r);
        }
    out.doubling_min = std::numeric_limits<double>::infinity();
    out.doubling_max = 0.0;
    for (std::size_t a = 1; a < traj.levels(); ++a)
        for (std::size_t b = 1; b < traj.levels(); ++b) {
            if (std::abs(traj.t[b] - 2.0 * traj.t[a]) > 1e-12) continue;
            for (std::size_t i = 0; i < n; ++i) {
                const double ax = std::abs(grid.x(i));
                if (ax <= grid.R_dom / 4.0 || ax >= grid.R_dom / 2.0) continue;
                const double r = traj.u[b][i] / traj.u[a][i];
                out.doubling_min = std::min(out.doubling_min, r);
                out.doubling_max = std::max(out.doubling_max, r);
            }
        }
    const bool doubling_ok = out.doubling_max > 0.0 && out.doubling_min >= 1.5 && out.doubling_max <= 2.5;
    out.pass = out.ratio_min > 0.0 && out.ratio_min >= band_lo && out.ratio_max <= band_hi && doubling_ok;
    return out;
}

}  // namespace nlobs
