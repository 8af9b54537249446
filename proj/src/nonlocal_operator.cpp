#include "nlobs/nonlocal_operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nlobs/error.hpp"
#include "nlobs/parallel.hpp"
#include "nlobs/quadrature.hpp"

namespace nlobs {
namespace {

constexpr double pi = std::numbers::pi;

// Integral of (1 - g(z)) z^{-1-2s} over [0, Z] where 1 - g(z) ~ q2 z^2 + q4 z^4
// near zero; geometric panels from a tiny seed interval handled by the series.
template <typename OneMinus>
double near_origin_integral(OneMinus one_minus, double s, double q2, double q4, double Z) {
    const auto& gl = quad::GaussLegendre<24>::get();
    const double a0 = 1e-4;
    double sum = q2 * std::pow(a0, 2.0 - 2.0 * s) / (2.0 - 2.0 * s) +
                 q4 * std::pow(a0, 4.0 - 2.0 * s) / (4.0 - 2.0 * s);
    auto f = [&](double z) { return one_minus(z) * std::pow(z, -1.0 - 2.0 * s); };
    double lo = a0;
    while (lo < std::min(Z, pi)) {
        const double hi = std::min(2.0 * lo, pi);
        sum += gl.integrate(f, lo, hi);
        lo = hi;
    }
    for (double p = pi; p < Z - 1e-9; p += pi) sum += gl.integrate(f, p, std::min(p + pi, Z));
    return sum;
}

double linear_profile(const std::vector<double>& r, const std::vector<double>& rho, double x) {
    if (x <= r.front()) return rho.front();
    if (x >= r.back()) return rho.back();
    const auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - r.begin());
    const double t = (x - r[j - 1]) / (r[j] - r[j - 1]);
    return rho[j - 1] + t * (rho[j] - rho[j - 1]);
}

// Integral of K(y) f(y) over [a, b] with 0 < a < b, split at profile nodes
// and into panels whose endpoint ratio is at most 2.
template <typename F>
double radial_integral(const KernelSpec& k, double a, double b, F f) {
    const auto& gl = quad::GaussLegendre<16>::get();
    auto g = [&](double y) { return k(y) * f(y); };
    std::vector<double> cuts{a};
    if (k.kind == KernelKind::custom)
        for (double r : k.profile_r)
            if (r > a && r < b) cuts.push_back(r);
    cuts.push_back(b);
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
        double lo = cuts[j];
        while (lo < cuts[j + 1]) {
            const double hi = std::min(2.0 * lo, cuts[j + 1]);
            sum += gl.integrate(g, lo, hi);
            lo = hi;
        }
    }
    return sum;
}

// Mass of K on [a, infinity).
double mass_beyond(const KernelSpec& k, double a) {
    const double s2 = 2.0 * k.s;
    if (k.kind == KernelKind::fractional) return k.calibration * std::pow(a, -s2) / s2;
    const double r_end = k.profile_r.back();
    if (a >= r_end) return k.calibration * k.profile_rho.back() * std::pow(a, -s2) / s2;
    return radial_integral(k, a, r_end, [](double) { return 1.0; }) +
           k.calibration * k.profile_rho.back() * std::pow(r_end, -s2) / s2;
}

// (1/h^2) * int_0^h y^2 K(y) dy: the second-difference correction on |y| < h.
double singular_mass(const KernelSpec& k, double h) {
    const double base = k.calibration * std::pow(h, -2.0 * k.s) / (2.0 - 2.0 * k.s);
    if (k.kind == KernelKind::fractional) return base;
    const double p = 1.0 / (2.0 - 2.0 * k.s);
    auto f = [&](double z) { return linear_profile(k.profile_r, k.profile_rho, h * std::pow(z, p)); };
    return base * quad::composite<16>(f, 0.0, 1.0, 16);
}

double ramp_up(const KernelSpec& k, double h, std::size_t m) {
    const double a = static_cast<double>(m - 1) * h;
    return radial_integral(k, a, a + h, [&](double y) { return (y - a) / h; });
}

double ramp_down(const KernelSpec& k, double h, std::size_t m) {
    const double b = static_cast<double>(m) * h;
    return radial_integral(k, b, b + h, [&](double y) { return (b + h - y) / h; });
}

}  // namespace

double KernelSpec::modulation(double r) const {
    if (kind == KernelKind::fractional) return 1.0;
    return linear_profile(profile_r, profile_rho, r);
}

double KernelSpec::operator()(double y) const {
    const double r = std::abs(y);
    return calibration * modulation(r) * std::pow(r, -static_cast<double>(dim) - 2.0 * s);
}

bool KernelSpec::sandwich_holds(std::span<const double> ys) const {
    constexpr double rel = 1e-12;
    for (double y : ys) {
        if (y == 0.0) continue;
        const double base = std::pow(std::abs(y), -static_cast<double>(dim) - 2.0 * s);
        const double kv = (*this)(y);
        if (kv != (*this)(-y)) return false;
        if (kv < lambda * base * (1.0 - rel) || kv > Lambda * base * (1.0 + rel)) return false;
    }
    return true;
}

double unit_symbol_integral(double s, int dim) {
    if (!(s > 0.0 && s <= 0.5)) throw Error(ErrorKind::parameter, "kernel order s must lie in (0, 1/2]");
    if (dim == 1) {
        const double Z = 2.0 * pi * 400.0;
        const double body = near_origin_integral([](double z) { return 1.0 - std::cos(z); }, s,
                                                 0.5, -1.0 / 24.0, Z);
        const double beta = 1.0 + 2.0 * s;
        // int_Z^inf cos(z) z^{-beta} dz at Z a multiple of 2 pi, two asymptotic terms
        const double cos_tail = beta * std::pow(Z, -beta - 1.0) -
                                beta * (beta + 1.0) * (beta + 2.0) * std::pow(Z, -beta - 3.0);
        const double tail = std::pow(Z, -2.0 * s) / (2.0 * s) - cos_tail;
        return 2.0 * (body + tail);
    }
    if (dim == 2) {
        const double Z = 2000.0 * pi;
        const double body = near_origin_integral(
            [](double r) { return 1.0 - std::cyl_bessel_j(0.0, r); }, s, 0.25, -1.0 / 64.0, Z);
        return 2.0 * pi * (body + std::pow(Z, -2.0 * s) / (2.0 * s));
    }
    throw Error(ErrorKind::parameter, "kernel dim must be 1 or 2");
}

KernelSpec fractional_kernel(double s, int dim) {
    if (!(s > 0.0 && s <= 0.5)) throw Error(ErrorKind::parameter, "kernel order s must lie in (0, 1/2]");
    if (dim != 1 && dim != 2) throw Error(ErrorKind::parameter, "kernel dim must be 1 or 2");
    KernelSpec k;
    k.s = s;
    k.dim = dim;
    k.kind = KernelKind::fractional;
    k.calibration = 1.0 / unit_symbol_integral(s, dim);
    k.lambda = k.Lambda = k.calibration;
    return k;
}

KernelSpec custom_kernel(double s, std::vector<double> radii, std::vector<double> rho, double scale) {
    if (!(s > 0.0 && s <= 0.5)) throw Error(ErrorKind::parameter, "kernel order s must lie in (0, 1/2]");
    if (radii.empty() || radii.size() != rho.size())
        throw Error(ErrorKind::parameter, "custom kernel profile needs matching non-empty tables");
    for (std::size_t j = 0; j < radii.size(); ++j) {
        if (!(radii[j] > 0.0) || (j > 0 && !(radii[j] > radii[j - 1])))
            throw Error(ErrorKind::parameter, "custom kernel radii must be positive and increasing");
        if (!(rho[j] > 0.0)) throw Error(ErrorKind::parameter, "custom kernel profile must be positive");
    }
    if (!(scale > 0.0)) throw Error(ErrorKind::parameter, "custom kernel scale must be positive");
    KernelSpec k;
    k.s = s;
    k.dim = 1;
    k.kind = KernelKind::custom;
    k.calibration = scale;
    const auto [lo, hi] = std::minmax_element(rho.begin(), rho.end());
    k.lambda = scale * *lo;
    k.Lambda = scale * *hi;
    k.profile_r = std::move(radii);
    k.profile_rho = std::move(rho);
    return k;
}

namespace detail {

double offset_weight(const KernelSpec& kernel, double h, std::size_t m) {
    if (m == 0) return 0.0;
    if (m == 1) return singular_mass(kernel, h) + ramp_down(kernel, h, 1);
    return ramp_up(kernel, h, m) + ramp_down(kernel, h, m);
}

double weight_tail(const KernelSpec& kernel, double h, std::size_t first) {
    if (first <= 1) return offset_weight(kernel, h, 1) + weight_tail(kernel, h, 2);
    return ramp_up(kernel, h, first) + mass_beyond(kernel, static_cast<double>(first) * h);
}

}  // namespace detail

double DiscreteOperator::weight(std::ptrdiff_t m) const {
    const auto a = static_cast<std::size_t>(m < 0 ? -m : m);
    if (far_field_ == FarField::periodic) return w_[a % n_];
    return a < w_.size() ? w_[a] : 0.0;
}

double DiscreteOperator::diagonal(std::size_t i) const {
    double d = diag_;
    if (far_field_ == FarField::constant_extension) {
        if (i == 0) d -= ext_left_[0];
        if (i + 1 == n_) d -= ext_right_[n_ - 1];
    }
    return d;
}

double DiscreteOperator::max_diagonal() const {
    double d = 0.0;
    for (std::size_t i = 0; i < n_; ++i) d = std::max(d, diagonal(i));
    return d;
}

void DiscreteOperator::apply(std::span<const double> u, std::span<double> out) const {
    if (u.size() != n_ || out.size() != n_)
        throw Error(ErrorKind::shape, "field length " + std::to_string(u.size()) +
                                          " does not match operator size " + std::to_string(n_));
    const std::size_t n = n_;
    if (far_field_ == FarField::periodic) {
        parallel_for(0, n, [&](std::size_t i) {
            double acc = 0.0;
            for (std::size_t m = 1; m < n; ++m) acc += w_[m] * (u[i] - u[(i + m) % n]);
            out[i] = acc;
        });
        return;
    }
    const double fl = far_field_ == FarField::constant_extension ? u[0] : 0.0;
    const double fr = far_field_ == FarField::constant_extension ? u[n - 1] : 0.0;
    const std::size_t M = m_trunc_;
    parallel_for(0, n, [&](std::size_t i) {
        const std::size_t ml = std::min(i, M);
        const std::size_t mr = std::min(n - 1 - i, M);
        double acc = 0.0;
        for (std::size_t m = 1; m <= ml; ++m) acc += w_[m] * (u[i] - u[i - m]);
        for (std::size_t m = 1; m <= mr; ++m) acc += w_[m] * (u[i] - u[i + m]);
        acc += ext_left_[i] * (u[i] - fl) + ext_right_[i] * (u[i] - fr);
        out[i] = acc;
    });
}

std::vector<double> DiscreteOperator::apply(std::span<const double> u) const {
    std::vector<double> out(n_);
    apply(u, out);
    return out;
}

Eigen::MatrixXd DiscreteOperator::matrix() const {
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (far_field_ == FarField::periodic) {
            double d = 0.0;
            for (Eigen::Index m = 1; m < n; ++m) {
                L(i, (i + m) % n) -= w_[static_cast<std::size_t>(m)];
                d += w_[static_cast<std::size_t>(m)];
            }
            L(i, i) += d;
            continue;
        }
        L(i, i) = diag_;
        const auto M = static_cast<Eigen::Index>(m_trunc_);
        for (Eigen::Index m = 1; m <= std::min(i, M); ++m) L(i, i - m) = -w_[static_cast<std::size_t>(m)];
        for (Eigen::Index m = 1; m <= std::min(n - 1 - i, M); ++m)
            L(i, i + m) = -w_[static_cast<std::size_t>(m)];
        if (far_field_ == FarField::constant_extension) {
            const auto iu = static_cast<std::size_t>(i);
            L(i, 0) -= ext_left_[iu];
            L(i, n - 1) -= ext_right_[iu];
        }
    }
    return L;
}

DiscreteOperator build_discrete_operator(const KernelSpec& kernel, const GridSpec& grid,
                                         const OperatorOptions& options) {
    grid.validate();
    if (kernel.dim != 1 || grid.dim != 1)
        throw Error(ErrorKind::unsupported, "discrete operators are implemented for dim 1 only");
    if (!(kernel.s > 0.0 && kernel.s <= 0.5))
        throw Error(ErrorKind::unsupported, "kernel order outside (0, 1/2]");
    if (options.purpose == OperatorPurpose::obstacle && !(kernel.s < 0.5))
        throw Error(ErrorKind::unsupported,
                    "obstacle runs require the supercritical regime s in (0, 1/2)");
    const bool periodic = options.far_field == FarField::periodic;
    if (periodic != grid.periodic)
        throw Error(ErrorKind::mode, "periodic closure requires a periodic grid and vice versa");

    DiscreteOperator op;
    op.kernel_ = kernel;
    op.far_field_ = options.far_field;
    op.h_ = grid.spacing();
    op.n_ = grid.n_points;
    op.x_left_ = -grid.R_dom;
    const double h = op.h_;
    const std::size_t n = grid.n_points;

    if (periodic) {
        constexpr std::size_t images = 256;
        const std::size_t top = images * n;
        std::vector<double> W(top + 1, 0.0);
        parallel_for(1, top + 1, [&](std::size_t m) { W[m] = detail::offset_weight(kernel, h, m); });
        const double remainder = 2.0 * detail::weight_tail(kernel, h, top + 1);
        op.w_.assign(n, 0.0);
        for (std::size_t m = 1; m < n; ++m) {
            double acc = 0.0;
            for (std::size_t j = 0; j < images; ++j) acc += W[m + j * n] + W[n - m + j * n];
            op.w_[m] = acc + remainder / static_cast<double>(n);
        }
        op.m_trunc_ = n - 1;
        op.tail_coefficient_ = remainder;
        double d = 0.0;
        for (std::size_t m = 1; m < n; ++m) d += op.w_[m];
        op.diag_ = d;
        return op;
    }

    std::size_t M = n - 1;
    if (options.truncation_radius > 0.0) {
        const double q = options.truncation_radius / h;
        if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q))
            throw Error(ErrorKind::parameter, "truncation radius must be a multiple of the grid spacing");
        M = std::min<std::size_t>(M, static_cast<std::size_t>(std::llround(q)));
        if (M < 1) throw Error(ErrorKind::parameter, "truncation radius must be at least one spacing");
    }
    op.m_trunc_ = M;
    op.w_.assign(M + 1, 0.0);
    parallel_for(1, M + 1, [&](std::size_t m) { op.w_[m] = detail::offset_weight(kernel, h, m); });
    std::vector<double> suffix(M + 2, 0.0);
    suffix[M + 1] = detail::weight_tail(kernel, h, M + 1);
    for (std::size_t m = M; m >= 1; --m) suffix[m] = suffix[m + 1] + op.w_[m];
    op.tail_coefficient_ = 2.0 * suffix[M + 1];
    op.diag_ = 2.0 * suffix[1];
    op.ext_left_.resize(n);
    op.ext_right_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        op.ext_left_[i] = suffix[std::min(i, M) + 1];
        op.ext_right_[i] = suffix[std::min(n - 1 - i, M) + 1];
    }
    return op;
}

std::vector<double> apply_operator(const DiscreteOperator& op, std::span<const double> field) {
    return op.apply(field);
}

double symbol_check(const DiscreteOperator& op, double k) {
    if (op.far_field() != FarField::periodic)
        throw Error(ErrorKind::mode, "symbol_check requires the periodic closure");
    const double period = static_cast<double>(op.size()) * op.spacing();
    const double harmonic = k * period / (2.0 * pi);
    if (std::abs(harmonic - std::round(harmonic)) > 1e-9 * std::max(1.0, std::abs(harmonic)))
        throw Error(ErrorKind::parameter, "frequency must be a multiple of the fundamental");
    std::vector<double> field(op.size());
    for (std::size_t i = 0; i < op.size(); ++i)
        field[i] = std::cos(k * (op.x_left_ + static_cast<double>(i) * op.spacing()));
    const auto out = op.apply(field);
    const double pos = -op.x_left_ / op.spacing();
    const auto i0 = static_cast<std::size_t>(std::llround(pos));
    if (std::abs(pos - static_cast<double>(i0)) > 1e-9)
        throw Error(ErrorKind::parameter, "periodic grid has no node at x = 0");
    return out[i0] / std::cos(0.0);
}

}  // namespace nlobs
