#include "nlobs/free_boundary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlobs/error.hpp"

namespace nlobs {

const char* to_string(PointLabel label) noexcept {
    switch (label) {
        case PointLabel::regular: return "regular";
        case PointLabel::singular: return "singular";
        case PointLabel::undetermined: return "undetermined";
    }
    return "undetermined";
}

std::size_t FreeBoundaryCurve::sample_of(std::size_t node) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
    if (it == nodes.end() || *it != node) return npos;
    return static_cast<std::size_t>(it - nodes.begin());
}

double default_fb_tolerance(double complementarity_tol, double epsilon, double Lphi_sup) {
    const double slack = epsilon * std::max(0.0, std::log(Lphi_sup));
    return 10.0 * std::max(complementarity_tol, slack);
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

}  // namespace

FreeBoundaryCurve extract_gamma(const Trajectory& traj, double tol_fb) {
    if (!traj.valid) throw Error(ErrorKind::parameter, "trajectory is not valid: " + traj.failure);
    if (!(tol_fb > 0.0)) throw Error(ErrorKind::parameter, "tol_fb must be positive");
    const std::size_t n = traj.nodes(), K = traj.levels();
    if (K < 2) throw Error(ErrorKind::parameter, "trajectory needs at least two levels");
    FreeBoundaryCurve c;
    c.tol_fb = tol_fb;
    c.spacing = traj.grid.spacing();
    c.T = traj.t.back();
    c.first_detached.assign(n, K);
    const double root_tol = std::sqrt(tol_fb);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k0 = K;
        for (std::size_t k = 0; k < K; ++k) {
            if (traj.v(k, i) > tol_fb) {
                k0 = k;
                break;
            }
        }
        c.first_detached[i] = k0;
        for (std::size_t k = k0 + 1; k < K; ++k)
            if (traj.v(k, i) <= tol_fb) ++c.violations;
        if (k0 <= 1 || k0 == K) continue;
        const double a = std::sqrt(std::max(traj.v(k0 - 1, i), 0.0));
        const double b = std::sqrt(traj.v(k0, i));
        const double lo = traj.t[k0 - 1], hi = traj.t[k0];
        double gamma = lo + std::clamp((root_tol - a) / (b - a), 0.0, 1.0) * (hi - lo);
        if (k0 + 1 < K) {
            // the sqrt(v) line through the first two detached levels
            const double slope = (std::sqrt(traj.v(k0 + 1, i)) - b) / (traj.t[k0 + 1] - hi);
            if (slope > 0.0) gamma = std::clamp(hi - (b - root_tol) / slope, lo, hi);
        }
        c.nodes.push_back(i);
        c.x.push_back(traj.grid.x(i));
        c.gamma.push_back(gamma);
    }
    c.checked = n * K;
    c.graph_ok = static_cast<double>(c.violations) <= 1e-3 * static_cast<double>(c.checked);

    const std::size_t m = c.size();
    for (std::size_t p = 0; p < m;) {
        std::size_t q = p + 1;
        while (q < m && c.nodes[q] == c.nodes[q - 1] + 1) ++q;
        c.components.emplace_back(p, q);
        p = q;
    }
    const double h = c.spacing;
    c.grad_gamma.assign(m, std::numeric_limits<double>::quiet_NaN());
    for (const auto& [b, e] : c.components) {
        for (std::size_t p = b; p < e; ++p) {
            if (p > b && p + 1 < e) c.grad_gamma[p] = (c.gamma[p + 1] - c.gamma[p - 1]) / (2.0 * h);
            else if (p + 1 < e) c.grad_gamma[p] = (c.gamma[p + 1] - c.gamma[p]) / h;
            else if (p > b) c.grad_gamma[p] = (c.gamma[p] - c.gamma[p - 1]) / h;
        }
    }
    c.labels.assign(m, PointLabel::undetermined);
    return c;
}

RegularityFit lipschitz_and_holder_fit(const FreeBoundaryCurve& curve) {
    if (curve.size() < 32)
        throw Error(ErrorKind::parameter,
                    "regularity fit needs at least 32 curve samples, got " + std::to_string(curve.size()));
    RegularityFit r;
    const double h = curve.spacing;
    std::size_t longest = 0;
    for (const auto& [b, e] : curve.components) {
        longest = std::max(longest, e - b);
        for (std::size_t p = b; p + 1 < e; ++p)
            r.lipschitz = std::max(r.lipschitz, std::abs(curve.gamma[p + 1] - curve.gamma[p]) / h);
    }
    // secant-slope increments (Gamma(x+d) - 2 Gamma(x) + Gamma(x-d)) / d at dyadic d
    for (std::size_t m = 1; 4 * m <= longest; m *= 2) {
        double osc = 0.0;
        for (const auto& [b, e] : curve.components)
            for (std::size_t p = b + m; p + m < e; ++p)
                osc = std::max(osc, std::abs(curve.gamma[p + m] - 2.0 * curve.gamma[p] + curve.gamma[p - m]));
        osc /= static_cast<double>(m) * h;
        if (osc > 0.0) {
            r.separations.push_back(static_cast<double>(m) * h);
            r.oscillations.push_back(osc);
        }
    }
    if (r.separations.size() >= 3 && r.separations.back() >= 10.0 * r.separations.front()) {
        r.alpha = fit_power_law(r.separations, r.oscillations);
        r.alpha_determined = true;
    }
    return r;
}

Classification classify_points(FreeBoundaryCurve& curve, double tol_grad) {
    Classification out;
    const double h = curve.spacing;
    std::vector<double> third;
    double gmax = 0.0;
    for (const auto& [b, e] : curve.components)
        for (std::size_t p = b; p + 3 < e; ++p)
            third.push_back(std::abs(curve.gamma[p + 3] - 3.0 * curve.gamma[p + 2] + 3.0 * curve.gamma[p + 1] -
                                     curve.gamma[p]));
    for (double g : curve.gamma) gmax = std::max(gmax, std::abs(g));
    out.grad_noise = std::max(median(third), 1e-13 * (1.0 + gmax)) / (2.0 * h);
    out.tol_grad = std::isnan(tol_grad) ? 3.0 * out.grad_noise : tol_grad;

    curve.labels.assign(curve.size(), PointLabel::undetermined);
    for (const auto& [b, e] : curve.components)
        for (std::size_t p = b + 1; p + 1 < e; ++p)
            curve.labels[p] =
                std::abs(curve.grad_gamma[p]) > out.tol_grad ? PointLabel::regular : PointLabel::singular;
    for (const auto& [b, e] : curve.components)
        for (std::size_t p = b + 1; p + 1 < e; ++p)
            if (curve.labels[p] == PointLabel::regular && curve.labels[p - 1] != PointLabel::regular &&
                curve.labels[p + 1] != PointLabel::regular)
                out.regular_open = false;
    for (auto l : curve.labels) {
        if (l == PointLabel::regular) ++out.regular;
        else if (l == PointLabel::singular) ++out.singular;
        else ++out.undetermined;
    }
    return out;
}

namespace {

struct WindowData {
    std::vector<double> xi, tau, v;
};

struct ProfileFit {
    double a = 0.0, b = 0.0, c0 = 0.0, sse = 0.0, vv = 0.0;
};

// c0 eliminated in closed form for the front t = a xi + b xi^2
ProfileFit profile(const WindowData& w, double a, double b) {
    double bv = 0.0, bb = 0.0, vv = 0.0;
    for (std::size_t j = 0; j < w.v.size(); ++j) {
        const double r = std::max(w.tau[j] - (a + b * w.xi[j]) * w.xi[j], 0.0);
        const double q = r * r;
        bv += q * w.v[j];
        bb += q * q;
        vv += w.v[j] * w.v[j];
    }
    ProfileFit f;
    f.a = a;
    f.b = b;
    f.vv = vv;
    f.c0 = bb > 0.0 ? bv / bb : 0.0;
    f.sse = bb > 0.0 ? std::max(vv - bv * bv / bb, 0.0) : vv;
    return f;
}

template <class F>
double scan_golden(F&& f, double centre, double span) {
    constexpr int scan = 60;
    double best_x = centre, best = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= scan; ++j) {
        const double x = centre - span + 2.0 * span * j / scan;
        const double v = f(x);
        if (v < best) {
            best = v;
            best_x = x;
        }
    }
    double lo = best_x - 2.0 * span / scan, hi = best_x + 2.0 * span / scan;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 100 && hi - lo > 1e-13 * (1.0 + std::abs(best_x)); ++it) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    return 0.5 * (lo + hi);
}

ProfileFit fit_window(const WindowData& w, double guess, double RX, double RT) {
    const double a_span = 2.0 * (std::abs(guess) + RT / RX);
    const double b_span = 2.0 * a_span / RX;
    auto best_a = [&](double b) { return scan_golden([&](double a) { return profile(w, a, b).sse; }, guess, a_span); };
    const double b = scan_golden([&](double bb) { return profile(w, best_a(bb), bb).sse; }, 0.0, b_span);
    return profile(w, best_a(b), b);
}

// max |v - c0 (t - a xi)_+^2| and relative l2 residual of the first-order expansion
std::pair<double, double> expansion_residual(const WindowData& w, double c0, double a) {
    double mx = 0.0, sse = 0.0, vv = 0.0;
    for (std::size_t j = 0; j < w.v.size(); ++j) {
        const double r = std::max(w.tau[j] - a * w.xi[j], 0.0);
        const double e = w.v[j] - c0 * r * r;
        mx = std::max(mx, std::abs(e));
        sse += e * e;
        vv += w.v[j] * w.v[j];
    }
    return {mx, vv > 0.0 ? std::sqrt(sse / vv) : 0.0};
}

}  // namespace

ExpansionFit expansion_fit(const Trajectory& traj, const FreeBoundaryCurve& curve, std::size_t sample,
                           const ExpansionOptions& options, double tol_grad) {
    if (sample >= curve.size()) throw Error(ErrorKind::parameter, "sample index outside the curve");
    const double h = traj.grid.spacing();
    const double dt = traj.t.size() > 1 ? traj.t[1] - traj.t[0] : traj.grid.dt;
    if (options.rx < 4.0 * h * (1.0 - 1e-12) || options.rt < 4.0 * dt * (1.0 - 1e-12))
        throw Error(ErrorKind::parameter, "expansion window must span at least 8h by 8dt");
    if (options.windows < 3) throw Error(ErrorKind::parameter, "expansion fit needs at least 3 dyadic windows");

    ExpansionFit out;
    const std::size_t i0 = curve.nodes[sample];
    out.x0 = curve.x[sample];
    out.t0 = curve.gamma[sample];
    out.grad_gamma = curve.grad_gamma[sample];
    out.rx = options.rx;
    out.rt = options.rt;
    const double guess = std::isfinite(out.grad_gamma) ? out.grad_gamma : 0.0;

    for (int w = 0; w < options.windows; ++w) {
        const double scale = std::ldexp(1.0, w);
        const double RX = options.rx * scale, RT = options.rt * scale;
        WindowData data;
        std::size_t contact = 0, detached = 0;
        for (std::size_t i = 0; i < traj.nodes(); ++i) {
            const double xi = traj.grid.x(i) - out.x0;
            if (std::abs(xi) > RX * (1.0 + 1e-12)) continue;
            for (std::size_t k = 0; k < traj.levels(); ++k) {
                const double tau = traj.t[k] - out.t0;
                if (std::abs(tau) > RT * (1.0 + 1e-12)) continue;
                const double v = traj.v(k, i);
                (v <= curve.tol_fb ? contact : detached) += 1;
                data.xi.push_back(xi);
                data.tau.push_back(tau);
                data.v.push_back(v);
            }
        }
        if (contact == 0 || detached < 3)
            throw Error(ErrorKind::fit, "expansion window at x = " + std::to_string(out.x0) +
                                            " lacks contact or detached samples");
        const ProfileFit f = fit_window(data, guess, RX, RT);
        if (!(f.c0 > 0.0)) throw Error(ErrorKind::fit, "expansion fit found no positive curvature");
        const auto [max_res, rel] = expansion_residual(data, f.c0, f.a);
        if (w == 0) {
            out.c0 = f.c0;
            out.a = f.a;
            out.curvature = f.b;
            out.goodness = rel;
        }
        out.scales.push_back(scale);
        out.max_residuals.push_back(max_res);
    }
    out.residual_exponent = fit_power_law(out.scales, out.max_residuals);

    std::vector<double> ts, utt;
    for (std::size_t k = 1; k + 1 < traj.levels(); ++k) {
        if (traj.t[k - 1] <= out.t0 || traj.t[k] > out.t0 + 2.0 * options.rt) continue;
        ts.push_back(traj.t[k]);
        utt.push_back((traj.u[k + 1][i0] - traj.u[k - 1][i0]) / (traj.t[k + 1] - traj.t[k - 1]));
    }
    if (ts.size() >= 3) out.c0_from_utt = 0.5 * fit_line(ts, utt).slope;
    const double g = std::isfinite(out.grad_gamma) ? out.grad_gamma : 0.0;
    out.a_consistent = std::abs(out.a - g) <= 0.2 * std::max(std::abs(g), tol_grad);
    out.c0_consistent = std::abs(out.c0 - out.c0_from_utt) <= 0.3 * out.c0;
    return out;
}

ExpansionOptions expansion_window(const FreeBoundaryCurve& curve, std::size_t sample, double dt) {
    ExpansionOptions o;
    o.rx = 4.0 * curve.spacing;
    const double g = std::abs(curve.grad_gamma[sample]);
    o.rt = std::max(4.0 * dt, std::isfinite(g) ? g * o.rx : 0.0);
    return o;
}

std::vector<std::size_t> fit_candidates(const FreeBoundaryCurve& curve, double dt,
                                        std::size_t max_points) {
    std::vector<std::size_t> ok;
    for (const auto& [begin, end] : curve.components) {
        const double lo = curve.x[begin];
        const double hi = curve.x[end - 1];
        for (std::size_t p = begin; p < end; ++p) {
            if (curve.labels[p] != PointLabel::regular) continue;
            const auto o = expansion_window(curve, p, dt);
            const double grow = std::ldexp(1.0, o.windows - 1);
            const double X = o.rx * grow;
            const double Tw = o.rt * grow;
            if (curve.x[p] - X < lo - 1e-12 || curve.x[p] + X > hi + 1e-12) continue;
            if (curve.gamma[p] - Tw <= 0.0 || curve.gamma[p] + Tw >= curve.T) continue;
            ok.push_back(p);
        }
    }
    if (ok.size() <= max_points) return ok;
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < max_points; ++j) {
        const std::size_t pos = max_points == 1
                                    ? ok.size() / 2
                                    : static_cast<std::size_t>(std::llround(
                                          static_cast<double>(j) * static_cast<double>(ok.size() - 1) /
                                          static_cast<double>(max_points - 1)));
        out.push_back(ok[pos]);
    }
    return out;
}

SliceMeasure singular_slice_measure(const FreeBoundaryCurve& curve, const Trajectory& traj) {
    SliceMeasure m;
    const std::size_t n = traj.nodes(), K = traj.levels();
    if (curve.first_detached.size() != n) throw Error(ErrorKind::shape, "curve does not belong to the trajectory");
    std::vector<double> gamma(n);
    std::vector<char> singular(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = curve.sample_of(i);
        if (p != FreeBoundaryCurve::npos) {
            gamma[i] = curve.gamma[p];
            singular[i] = curve.labels[p] == PointLabel::singular;
        } else {
            gamma[i] = curve.first_detached[i] <= 1 ? 0.0 : std::numeric_limits<double>::infinity();
        }
    }
    const double cells = static_cast<double>(n - 1);
    m.noise = 1.0 / cells;
    for (std::size_t k = 1; k < K; ++k) {
        const double t = traj.t[k];
        std::size_t count = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double lo = std::min(gamma[i], gamma[i + 1]), hi = std::max(gamma[i], gamma[i + 1]);
            if (lo <= t && t < hi && (singular[i] || singular[i + 1])) ++count;
        }
        m.times.push_back(t);
        m.fraction.push_back(static_cast<double>(count) / cells);
    }
    m.median = median(m.fraction);
    m.max = m.fraction.empty() ? 0.0 : *std::max_element(m.fraction.begin(), m.fraction.end());
    return m;
}

bool slice_measure_refines(const SliceMeasure& coarse, const SliceMeasure& fine) {
    return fine.median <= coarse.median / 2.0 + fine.noise;
}

}  // namespace nlobs
