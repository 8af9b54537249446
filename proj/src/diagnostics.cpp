#include "nlobs/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "nlobs/error.hpp"
#include "nlobs/parallel.hpp"

namespace nlobs {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

double scale_of(const Trajectory& traj) {
    double m = 0.0;
    for (double p : traj.phi) m = std::max(m, std::abs(p));
    return std::max(1.0, m);
}

ClaimResult make_claim(const std::string& id) {
    ClaimResult c;
    c.id = id;
    c.anchor = claim_anchor(id);
    return c;
}

bool within_ratio(double fine, double coarse, double limit) {
    if (!(coarse > 0.0)) return fine <= 0.0;
    const double r = fine / coarse;
    return r <= limit && r >= 1.0 / limit;
}

bool within_band(double fine, double coarse, double band, double noise) {
    if (std::max(std::abs(fine), std::abs(coarse)) <= noise) return true;
    if (!(std::abs(coarse) > 0.0)) return false;
    return std::abs(fine / coarse - 1.0) <= band;
}

}  // namespace

const char* to_string(Verdict verdict) noexcept {
    switch (verdict) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::undetermined: return "undetermined";
    }
    return "undetermined";
}

Verdict verdict_from_string(const std::string& name) {
    if (name == "pass") return Verdict::pass;
    if (name == "fail") return Verdict::fail;
    if (name == "undetermined") return Verdict::undetermined;
    throw Error(ErrorKind::parameter, "unknown verdict '" + name + "'");
}

double ClaimResult::constant(const std::string& name) const {
    for (const auto& [key, value] : constants)
        if (key == name) return value;
    return nan_value;
}

DerivativeFields compute_derivatives(const Trajectory& traj) {
    DerivativeFields d;
    d.levels = traj.levels();
    d.nodes = traj.nodes();
    d.h = traj.grid.spacing();
    d.dt = traj.grid.dt;
    const std::size_t total = d.levels * d.nodes;
    for (auto* f : {&d.ut, &d.ux, &d.uxx, &d.utt, &d.uxt}) f->assign(total, nan_value);
    if (d.levels < 3 || d.nodes < 3) return d;

    const double h = d.h;
    const double dt = d.dt;
    parallel_for(1, d.levels - 1, [&](std::size_t k) {
        const auto& um = traj.u[k - 1];
        const auto& u0 = traj.u[k];
        const auto& up = traj.u[k + 1];
        for (std::size_t i = 1; i + 1 < d.nodes; ++i) {
            const std::size_t j = d.index(k, i);
            d.ut[j] = (up[i] - um[i]) / (2.0 * dt);
            d.ux[j] = (u0[i + 1] - u0[i - 1]) / (2.0 * h);
            d.uxx[j] = (u0[i + 1] - 2.0 * u0[i] + u0[i - 1]) / (h * h);
            d.utt[j] = (up[i] - 2.0 * u0[i] + um[i]) / (dt * dt);
            d.uxt[j] = (up[i + 1] - up[i - 1] - um[i + 1] + um[i - 1]) / (4.0 * h * dt);
        }
    });
    return d;
}

std::pair<std::size_t, std::size_t> window_levels(const Trajectory& traj, double t1, double t2) {
    const std::size_t K = traj.levels();
    if (K < 3) return {1, 0};
    std::size_t first = K, last = 0;
    const double slack = 1e-9 * traj.grid.dt;
    for (std::size_t k = 1; k + 1 < K; ++k) {
        if (traj.t[k] < t1 - slack || traj.t[k] > t2 + slack) continue;
        first = std::min(first, k);
        last = std::max(last, k);
    }
    if (first > last) return {1, 0};
    return {first, last};
}

UtIdentityMeasure measure_ut_identity(const Trajectory& traj, const DiscreteOperator& op,
                                      const DerivativeFields& d, const AnalysisWindow& window) {
    UtIdentityMeasure m;
    m.h = d.h;
    m.dt = d.dt;
    m.scale = scale_of(traj);
    const std::size_t K = traj.levels();
    const std::size_t n = traj.nodes();
    if (K < 3) return m;
    const auto [first, last] = window_levels(traj, window.t1, window.t2);
    const double detached_floor = 1e-8 * m.scale;

    std::vector<double> residual(K, 0.0), contact(K, std::numeric_limits<double>::infinity()),
        detached(K, 0.0);
    for (std::size_t k = 1; k < K; ++k) {
        const auto Lu = apply_operator(op, traj.u[k]);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double back = (traj.u[k][i] - traj.u[k - 1][i]) / d.dt;
            bool interior_contact = true;
            for (std::size_t q = i - 1; q <= i + 1; ++q)
                if (traj.v(k, q) > 0.0 || traj.v(k - 1, q) > 0.0) interior_contact = false;
            if (interior_contact) contact[k] = std::min(contact[k], Lu[i]);
            if (traj.v(k, i) > detached_floor)
                detached[k] = std::max(detached[k], std::abs(back + Lu[i]));
            if (k >= first && k <= last && window.contains_x(traj.grid.x(i), traj.grid.R_dom)) {
                const double r = std::abs(d.ut[d.index(k, i)] - std::max(-Lu[i], 0.0));
                residual[k] = std::max(residual[k], r);
            }
        }
    }
    m.contact_min_Lu = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < K; ++k) {
        m.residual = std::max(m.residual, residual[k]);
        m.contact_min_Lu = std::min(m.contact_min_Lu, contact[k]);
        m.detached_residual = std::max(m.detached_residual, detached[k]);
    }
    if (!std::isfinite(m.contact_min_Lu)) m.contact_min_Lu = 0.0;
    m.constant = m.residual / (m.h + m.dt);
    return m;
}

ClaimResult check_ut_identity(const UtIdentityMeasure& coarse, const UtIdentityMeasure* fine,
                              double tol) {
    ClaimResult c = make_claim("ut_identity");
    c.tolerance = refinement_ratio_limit;
    c.constants = {{"residual", coarse.residual},
                   {"C", coarse.constant},
                   {"contact_min_Lu", coarse.contact_min_Lu},
                   {"detached_residual", coarse.detached_residual}};
    auto exact = [tol](const UtIdentityMeasure& m) {
        return m.contact_min_Lu >= -tol * m.scale && m.detached_residual <= tol * m.scale &&
               std::isfinite(m.residual);
    };
    if (!exact(coarse)) {
        c.verdict = Verdict::fail;
        c.note = "complementarity identity violated beyond tolerance";
        return c;
    }
    if (!fine) {
        c.note = "no refinement run";
        return c;
    }
    const double ratio = coarse.constant > 0.0 ? fine->constant / coarse.constant : nan_value;
    c.constants.push_back({"residual_fine", fine->residual});
    c.constants.push_back({"C_fine", fine->constant});
    c.constants.push_back({"C_ratio", ratio});
    c.constants.push_back({"residual_reduction",
                           fine->residual > 0.0 ? coarse.residual / fine->residual : nan_value});
    if (!exact(*fine)) {
        c.verdict = Verdict::fail;
        c.note = "complementarity identity violated on the refined run";
    } else if (coarse.residual <= tol * coarse.scale && fine->residual <= tol * fine->scale) {
        c.verdict = Verdict::pass;
        c.note = "residual at solver tolerance";
    } else {
        c.verdict = within_ratio(fine->constant, coarse.constant, refinement_ratio_limit)
                        ? Verdict::pass
                        : Verdict::fail;
    }
    return c;
}

LipschitzMeasure measure_lipschitz(const Trajectory& traj, const ObstacleSpec& obstacle,
                                   const DerivativeFields& d, const AnalysisWindow& window) {
    LipschitzMeasure m;
    m.scale = scale_of(traj);
    m.phi_lipschitz = obstacle.lipschitz_constant();
    m.phi_sup = obstacle.sup_norm();
    for (std::size_t k = 0; k < traj.levels(); ++k)
        for (double u : traj.u[k]) m.max_u = std::max(m.max_u, std::abs(u));
    for (std::size_t k = 1; k + 1 < d.levels; ++k)
        for (std::size_t i = 1; i + 1 < d.nodes; ++i) {
            if (!window.contains_x(traj.grid.x(i), traj.grid.R_dom)) continue;
            const std::size_t j = d.index(k, i);
            m.max_grad = std::max(m.max_grad, std::abs(d.ux[j]));
            m.max_ut = std::max(m.max_ut, std::abs(d.ut[j]));
        }
    return m;
}

ClaimResult check_lipschitz(const LipschitzMeasure& coarse, const LipschitzMeasure* fine,
                            double grad_slack, double tol) {
    ClaimResult c = make_claim("lipschitz");
    c.tolerance = grad_slack;
    c.constants = {{"max_grad", coarse.max_grad},
                   {"phi_lipschitz", coarse.phi_lipschitz},
                   {"max_ut", coarse.max_ut},
                   {"max_u", coarse.max_u},
                   {"phi_sup", coarse.phi_sup}};
    auto bounds = [&](const LipschitzMeasure& m) {
        return m.max_grad <= m.phi_lipschitz + grad_slack &&
               m.max_u <= m.phi_sup + tol * m.scale && std::isfinite(m.max_ut);
    };
    if (!bounds(coarse)) {
        c.verdict = Verdict::fail;
        c.note = "gradient or sup bound exceeded";
        return c;
    }
    if (!fine) {
        c.note = "no refinement run";
        return c;
    }
    c.constants.push_back({"max_grad_fine", fine->max_grad});
    c.constants.push_back({"max_ut_fine", fine->max_ut});
    c.constants.push_back(
        {"ut_ratio", coarse.max_ut > 0.0 ? fine->max_ut / coarse.max_ut : nan_value});
    const bool stable = coarse.max_ut <= tol * coarse.scale
                            ? fine->max_ut <= tol * fine->scale
                            : within_ratio(fine->max_ut, coarse.max_ut, refinement_ratio_limit);
    if (!bounds(*fine)) {
        c.verdict = Verdict::fail;
        c.note = "gradient or sup bound exceeded on the refined run";
    } else {
        c.verdict = stable ? Verdict::pass : Verdict::fail;
        if (!stable) c.note = "max |u_t| not refinement-stable";
    }
    return c;
}

const std::vector<LatticeDirection>& semiconvexity_fan() {
    static const std::vector<LatticeDirection> fan = {{1, 0}, {0, 1}, {1, 1}, {1, -1},
                                                      {2, 1}, {2, -1}, {1, 2}, {1, -2}};
    return fan;
}

double lattice_second_difference(const Trajectory& traj, std::size_t k, std::size_t i,
                                 LatticeDirection e) {
    const double h = traj.grid.spacing();
    const double dt = traj.grid.dt;
    const auto kp = static_cast<std::ptrdiff_t>(k) + e.l;
    const auto km = static_cast<std::ptrdiff_t>(k) - e.l;
    const auto ip = static_cast<std::ptrdiff_t>(i) + e.m;
    const auto im = static_cast<std::ptrdiff_t>(i) - e.m;
    const auto K = static_cast<std::ptrdiff_t>(traj.levels());
    const auto n = static_cast<std::ptrdiff_t>(traj.nodes());
    if (std::min({kp, km, ip, im}) < 0 || std::max(kp, km) >= K || std::max(ip, im) >= n)
        return nan_value;
    const double len2 = e.m * e.m * h * h + e.l * e.l * dt * dt;
    return (traj.u[kp][ip] - 2.0 * traj.u[k][i] + traj.u[km][im]) / len2;
}

SemiconvexityMeasure measure_semiconvexity(const Trajectory& traj, const AnalysisWindow& window) {
    SemiconvexityMeasure m;
    const auto& fan = semiconvexity_fan();
    m.directions = fan.size();
    const auto [first, last] = window_levels(traj, window.t1, window.t2);
    const double h = traj.grid.spacing();
    const double dt = traj.grid.dt;
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& e : fan)
        for (std::size_t k = first; k <= last; ++k)
            for (std::size_t i = 0; i < traj.nodes(); ++i) {
                if (!window.contains_x(traj.grid.x(i), traj.grid.R_dom)) continue;
                const double val = lattice_second_difference(traj, k, i, e);
                if (val < lowest) {
                    lowest = val;
                    m.theta = std::atan2(e.l * dt, e.m * h);
                    m.t = traj.t[k];
                    m.x = traj.grid.x(i);
                }
            }
    m.C_hat = std::isfinite(lowest) ? std::max(0.0, -lowest) : 0.0;
    return m;
}

ClaimResult check_semiconvexity(const SemiconvexityMeasure& coarse,
                                const SemiconvexityMeasure* fine) {
    ClaimResult c = make_claim("semiconvexity");
    c.tolerance = refinement_band;
    c.constants = {{"C_hat", coarse.C_hat},
                   {"theta", coarse.theta},
                   {"x", coarse.x},
                   {"t", coarse.t},
                   {"directions", static_cast<double>(coarse.directions)}};
    if (!std::isfinite(coarse.C_hat)) {
        c.verdict = Verdict::fail;
        c.note = "C_hat not finite";
        return c;
    }
    if (!fine) {
        c.note = "no refinement run";
        return c;
    }
    c.constants.push_back({"C_hat_fine", fine->C_hat});
    c.constants.push_back(
        {"C_hat_ratio", coarse.C_hat > 0.0 ? fine->C_hat / coarse.C_hat : nan_value});
    c.verdict = std::isfinite(fine->C_hat) &&
                        within_band(fine->C_hat, coarse.C_hat, refinement_band, 1e-9)
                    ? Verdict::pass
                    : Verdict::fail;
    return c;
}

GradientMeasure measure_gradient_vs_ut(const Trajectory& traj, const DerivativeFields& d,
                                       const AnalysisWindow& window, double tol_fb) {
    GradientMeasure m;
    const auto [first, last] = window_levels(traj, window.t1, window.t2);
    double sup_vt = 0.0;
    for (std::size_t k = first; k <= last; ++k)
        for (std::size_t i = 1; i + 1 < d.nodes; ++i)
            if (window.contains_x(traj.grid.x(i), traj.grid.R_dom))
                sup_vt = std::max(sup_vt, std::abs(d.ut[d.index(k, i)]));
    m.noise = 1e-6 * sup_vt;
    const auto& phi = traj.phi;
    for (std::size_t k = first; k <= last; ++k)
        for (std::size_t i = 1; i + 1 < d.nodes; ++i) {
            if (!window.contains_x(traj.grid.x(i), traj.grid.R_dom)) continue;
            const bool detached = traj.v(k, i) > tol_fb && traj.v(k - 1, i) > tol_fb &&
                                  traj.v(k + 1, i) > tol_fb && traj.v(k, i - 1) > tol_fb &&
                                  traj.v(k, i + 1) > tol_fb;
            const std::size_t j = d.index(k, i);
            const double vt = d.ut[j];
            if (!detached || !(vt > m.noise)) {
                ++m.excluded;
                continue;
            }
            ++m.admissible;
            const double vx = d.ux[j] - (phi[i + 1] - phi[i - 1]) / (2.0 * d.h);
            const double r = std::abs(vx) / vt;
            if (r > m.C) {
                m.C = r;
                m.t = traj.t[k];
                m.x = traj.grid.x(i);
            }
        }
    return m;
}

ClaimResult check_gradient_vs_ut(const GradientMeasure& coarse, const GradientMeasure* fine) {
    ClaimResult c = make_claim("gradient_vs_ut");
    c.tolerance = refinement_band;
    c.constants = {{"C", coarse.C},
                   {"x", coarse.x},
                   {"t", coarse.t},
                   {"noise", coarse.noise},
                   {"admissible", static_cast<double>(coarse.admissible)}};
    if (!std::isfinite(coarse.C)) {
        c.verdict = Verdict::fail;
        c.note = "C not finite";
        return c;
    }
    if (coarse.admissible == 0) {
        c.note = "no detached nodes above the noise floor";
        return c;
    }
    if (!fine) {
        c.note = "no refinement run";
        return c;
    }
    c.constants.push_back({"C_fine", fine->C});
    c.constants.push_back({"C_ratio", coarse.C > 0.0 ? fine->C / coarse.C : nan_value});
    c.verdict = std::isfinite(fine->C) && within_band(fine->C, coarse.C, refinement_band, 0.0)
                    ? Verdict::pass
                    : Verdict::fail;
    return c;
}

RatePoint rate_at(const Trajectory& traj, const FreeBoundaryCurve& curve,
                  const DerivativeFields& d, std::size_t sample, double tau_max,
                  std::size_t min_samples) {
    RatePoint p;
    p.x0 = curve.x[sample];
    p.t0 = curve.gamma[sample];
    p.label = curve.labels[sample];
    const std::size_t i = curve.nodes[sample];
    if (i == 0 || i + 1 >= d.nodes) return p;
    std::vector<double> tau, vt, v;
    for (std::size_t k = 1; k + 1 < d.levels; ++k) {
        const double s = traj.t[k] - p.t0;
        if (s < d.dt * (1.0 - 1e-9) || s > tau_max * (1.0 + 1e-9)) continue;
        tau.push_back(s);
        vt.push_back(d.ut[d.index(k, i)]);
        v.push_back(traj.v(k, i));
    }
    p.samples = tau.size();
    if (p.samples < min_samples) return p;
    p.p = fit_power_law(tau, vt);
    p.q = fit_power_law(tau, v);
    p.c0_lower = std::numeric_limits<double>::infinity();
    p.M_upper = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tau.size(); ++j) {
        const double r = vt[j] / tau[j];
        p.c0_lower = std::min(p.c0_lower, r);
        p.M_upper = std::max(p.M_upper, r);
    }
    p.determined = p.p.samples >= 3 && p.q.samples >= 3;
    p.pass = p.determined && p.p.within(0.8, 1.2) && p.q.within(1.8, 2.2) && p.c0_lower > 0.0;
    return p;
}

RateMeasure measure_hopf_antihopf(const Trajectory& traj, const FreeBoundaryCurve& curve,
                                  const DerivativeFields& d, const AnalysisWindow& window,
                                  const RateOptions& options) {
    RateMeasure m;
    m.tau_max = options.tau_max > 0.0 ? options.tau_max : 16.0 * d.dt;
    const double top = std::min(window.t2, traj.t.back() - m.tau_max - d.dt);

    std::size_t apex = FreeBoundaryCurve::npos;
    for (std::size_t q = 0; q < curve.size(); ++q) {
        if (curve.labels[q] != PointLabel::singular) continue;
        if (apex == FreeBoundaryCurve::npos ||
            std::abs(curve.grad_gamma[q]) < std::abs(curve.grad_gamma[apex]) ||
            (std::abs(curve.grad_gamma[q]) == std::abs(curve.grad_gamma[apex]) &&
             curve.gamma[q] < curve.gamma[apex]))
            apex = q;
    }
    std::vector<std::size_t> chosen;
    if (apex != FreeBoundaryCurve::npos) chosen.push_back(apex);

    std::vector<std::size_t> eligible;
    for (std::size_t q = 0; q < curve.size(); ++q)
        if (curve.labels[q] == PointLabel::regular && curve.gamma[q] >= window.t1 &&
            curve.gamma[q] <= top)
            eligible.push_back(q);
    const std::size_t want =
        std::min(eligible.size(), options.max_points - std::min(options.max_points, chosen.size()));
    for (std::size_t j = 0; j < want; ++j) {
        const std::size_t pos =
            want == 1 ? eligible.size() / 2
                      : static_cast<std::size_t>(std::llround(
                            static_cast<double>(j) * static_cast<double>(eligible.size() - 1) /
                            static_cast<double>(want - 1)));
        chosen.push_back(eligible[pos]);
    }

    for (std::size_t q : chosen) {
        RatePoint p = rate_at(traj, curve, d, q, m.tau_max, options.min_samples);
        if (p.determined) ++m.determined;
        if (p.pass) ++m.passed;
        if (q == apex && p.determined) m.apex_tested = true;
        m.points.push_back(p);
    }
    return m;
}

ClaimResult check_hopf_antihopf(const RateMeasure& measure) {
    ClaimResult c = make_claim("hopf_antihopf");
    c.tolerance = 0.2;
    double p_lo = std::numeric_limits<double>::infinity(), p_hi = -p_lo;
    double q_lo = p_lo, q_hi = -p_lo, c0 = p_lo, M = -p_lo;
    for (const auto& p : measure.points) {
        if (!p.determined) continue;
        p_lo = std::min(p_lo, p.p.lower());
        p_hi = std::max(p_hi, p.p.upper());
        q_lo = std::min(q_lo, p.q.lower());
        q_hi = std::max(q_hi, p.q.upper());
        c0 = std::min(c0, p.c0_lower);
        M = std::max(M, p.M_upper);
    }
    c.constants = {{"points", static_cast<double>(measure.points.size())},
                   {"determined", static_cast<double>(measure.determined)},
                   {"passed", static_cast<double>(measure.passed)},
                   {"p_lower", p_lo},
                   {"p_upper", p_hi},
                   {"q_lower", q_lo},
                   {"q_upper", q_hi},
                   {"c0_lower", c0},
                   {"M_upper", M},
                   {"tau_max", measure.tau_max}};
    if (measure.passed < measure.determined) {
        c.verdict = Verdict::fail;
        for (const auto& p : measure.points)
            if (p.determined && !p.pass) {
                c.note = "rate window missed at x0 = " + std::to_string(p.x0);
                break;
            }
        return c;
    }
    if (measure.determined < 5 || !measure.apex_tested) {
        c.note = "fewer than 5 determined points or apex untested";
        return c;
    }
    c.verdict = Verdict::pass;
    return c;
}

C11Measure measure_c11(const Trajectory& traj, const DerivativeFields& d,
                       const AnalysisWindow& window, double tol_fb) {
    C11Measure m;
    const auto [first, last] = window_levels(traj, window.t1, window.t2);
    const double h3 = d.h * d.h * d.h;
    for (std::size_t k = first; k <= last; ++k) {
        for (std::size_t i = 1; i + 1 < d.nodes; ++i) {
            if (!window.contains_x(traj.grid.x(i), traj.grid.R_dom)) continue;
            const std::size_t j = d.index(k, i);
            m.sup_xx = std::max(m.sup_xx, std::abs(d.uxx[j]));
            m.sup_xt = std::max(m.sup_xt, std::abs(d.uxt[j]));
            m.sup_tt = std::max(m.sup_tt, std::abs(d.utt[j]));
        }
        const auto& u = traj.u[k];
        for (std::size_t i = 2; i + 2 < d.nodes; ++i) {
            if (!window.contains_x(traj.grid.x(i), traj.grid.R_dom)) continue;
            bool contact = false, detached = false;
            for (std::size_t q = i - 2; q <= i + 2; ++q)
                (traj.v(k, q) > tol_fb ? detached : contact) = true;
            if (!(contact && detached)) continue;
            const double third = (u[i + 2] - 2.0 * u[i + 1] + 2.0 * u[i - 1] - u[i - 2]) / (2.0 * h3);
            m.sup_third = std::max(m.sup_third, std::abs(third));
        }
    }
    return m;
}

ClaimResult check_c11(const C11Measure& coarse, const C11Measure* fine) {
    ClaimResult c = make_claim("c11");
    c.tolerance = refinement_ratio_limit;
    c.constants = {{"sup_xx", coarse.sup_xx},
                   {"sup_xt", coarse.sup_xt},
                   {"sup_tt", coarse.sup_tt},
                   {"sup_third", coarse.sup_third}};
    if (!std::isfinite(coarse.sup_xx) || !std::isfinite(coarse.sup_xt) ||
        !std::isfinite(coarse.sup_tt)) {
        c.verdict = Verdict::fail;
        c.note = "second differences not finite";
        return c;
    }
    if (!fine) {
        c.note = "no refinement run";
        return c;
    }
    auto ratio = [](double f, double co) { return co > 0.0 ? f / co : (f > 0.0 ? nan_value : 1.0); };
    const double rxx = ratio(fine->sup_xx, coarse.sup_xx);
    const double rxt = ratio(fine->sup_xt, coarse.sup_xt);
    const double rtt = ratio(fine->sup_tt, coarse.sup_tt);
    const double r3 = ratio(fine->sup_third, coarse.sup_third);
    c.constants.push_back({"ratio_xx", rxx});
    c.constants.push_back({"ratio_xt", rxt});
    c.constants.push_back({"ratio_tt", rtt});
    c.constants.push_back({"ratio_third", r3});
    const bool bounded = rxx <= refinement_ratio_limit && rxt <= refinement_ratio_limit &&
                         rtt <= refinement_ratio_limit;
    if (!bounded) {
        c.verdict = Verdict::fail;
        c.note = "second-difference sup grows under refinement";
    } else if (coarse.sup_third == 0.0 && fine->sup_third == 0.0) {
        c.verdict = Verdict::pass;
        c.note = "no free boundary in the window; optimality witness not applicable";
    } else if (!(r3 > refinement_ratio_limit)) {
        c.verdict = Verdict::fail;
        c.note = "third differences near the free boundary do not grow";
    } else {
        c.verdict = Verdict::pass;
    }
    return c;
}

MonotonicityMeasure measure_monotonicity(const Trajectory& traj) {
    MonotonicityMeasure m;
    m.scale = scale_of(traj);
    const double h = traj.grid.spacing();
    const double dt = traj.grid.dt;
    m.bound_detached = -10.0 * (h + dt) * m.scale;
    m.min_ut_detached = std::numeric_limits<double>::infinity();
    m.min_ut_all = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < traj.levels(); ++k)
        for (std::size_t i = 0; i < traj.nodes(); ++i) {
            const double ut = (traj.u[k][i] - traj.u[k - 1][i]) / dt;
            m.min_ut_all = std::min(m.min_ut_all, ut);
            if (traj.v(k, i) > 0.0) m.min_ut_detached = std::min(m.min_ut_detached, ut);
        }
    if (!std::isfinite(m.min_ut_detached)) m.min_ut_detached = 0.0;
    if (!std::isfinite(m.min_ut_all)) m.min_ut_all = 0.0;
    return m;
}

UtHolderData measure_ut_holder(const Trajectory& traj, const DerivativeFields& d, const ObstacleSpec& obstacle,
                               const AnalysisWindow& window, std::size_t max_cells) {
    UtHolderData m;
    m.alpha = 1.0 - 2.0 * traj.s;
    m.phi_lipschitz = obstacle.lipschitz_constant();
    const double h = traj.grid.spacing();
    const std::size_t n = traj.nodes();
    for (std::size_t k = 1; k + 1 < traj.levels(); ++k) {
        if (!(traj.t[k] < window.t1)) break;
        double sup = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (!window.contains_x(traj.grid.x(i), traj.grid.R_dom)) continue;
            for (std::size_t c = 1; c <= max_cells && i + c + 1 < n; ++c) {
                if (!window.contains_x(traj.grid.x(i + c), traj.grid.R_dom)) break;
                const double diff = std::abs(d.ut[d.index(k, i + c)] - d.ut[d.index(k, i)]);
                sup = std::max(sup, diff / std::pow(static_cast<double>(c) * h, m.alpha));
            }
        }
        m.times.push_back(traj.t[k]);
        m.seminorm.push_back(sup);
        m.max = std::max(m.max, sup);
    }
    return m;
}

ClaimResult check_monotonicity_positivity(const MonotonicityMeasure& measure, double tol) {
    ClaimResult c = make_claim("monotonicity_positivity");
    c.tolerance = tol;
    c.constants = {{"min_ut_detached", measure.min_ut_detached},
                   {"min_ut_all", measure.min_ut_all},
                   {"bound_detached", measure.bound_detached}};
    const bool ok = measure.min_ut_detached >= measure.bound_detached &&
                    measure.min_ut_all >= -tol * measure.scale;
    c.verdict = ok ? Verdict::pass : Verdict::fail;
    if (!ok) c.note = "u_t negative beyond tolerance";
    return c;
}

const std::vector<std::string>& claim_registry() {
    static const std::vector<std::string> ids = {
        "ut_identity", "lipschitz", "semiconvexity", "gradient_vs_ut",
        "hopf_antihopf", "c11", "monotonicity_positivity"};
    return ids;
}

const std::string& claim_anchor(const std::string& id) {
    static const std::map<std::string, std::string> anchors = {
        {"ut_identity", "u_t = (Lu)^- = max(-Lu, 0); Lu >= 0 in the interior of the contact set"},
        {"lipschitz", "|grad u|_inf <= |phi|_{C^{0,1}}, |u_t|_inf bounded, |u|_inf <= |phi|_inf"},
        {"semiconvexity", "d_ee u >= -C_hat for all unit space-time directions e"},
        {"gradient_vs_ut", "|grad v| <= C v_t on [t1, t2]"},
        {"hopf_antihopf",
         "c0 t <= v_t(x0, t0 + t) <= M t and v(x0, t0 + r) >= c0 r^2 at free-boundary points"},
        {"c11", "D^2_x u, d_t grad u, d_tt u bounded on [t1, t2]; C^{1,1} is optimal"},
        {"monotonicity_positivity", "u_t > 0 in {u > phi}"},
    };
    const auto it = anchors.find(id);
    if (it == anchors.end()) throw Error(ErrorKind::assembly, "unknown claim id '" + id + "'");
    return it->second;
}

DiagnosticsReport assemble_report(const RunMetadata& run, std::vector<ClaimResult> claims) {
    DiagnosticsReport report;
    report.run = run;
    for (const auto& c : claims) {
        const auto& ids = claim_registry();
        if (std::find(ids.begin(), ids.end(), c.id) == ids.end())
            throw Error(ErrorKind::assembly, "unknown claim id '" + c.id + "'");
    }
    for (const auto& id : claim_registry()) {
        std::size_t found = 0;
        const ClaimResult* entry = nullptr;
        for (const auto& c : claims)
            if (c.id == id) {
                ++found;
                entry = &c;
            }
        if (found == 0) throw Error(ErrorKind::assembly, "claim '" + id + "' missing from report");
        if (found > 1) throw Error(ErrorKind::assembly, "claim '" + id + "' reported twice");
        report.claims.push_back(*entry);
    }
    report.overall = Verdict::pass;
    for (const auto& c : report.claims)
        if (c.verdict == Verdict::fail) {
            report.overall = Verdict::fail;
            report.first_failure = c.id;
            break;
        }
    return report;
}

namespace {

using ojson = nlohmann::ordered_json;

ojson number(double v) { return std::isnan(v) ? ojson(nullptr) : ojson(v); }
double number_of(const ojson& j) { return j.is_null() ? nan_value : j.get<double>(); }

}  // namespace

std::string report_to_json(const DiagnosticsReport& report) {
    ojson j;
    j["run"] = {{"h", number(report.run.h)},
                {"dt", number(report.run.dt)},
                {"epsilon", number(report.run.epsilon)},
                {"s", number(report.run.s)},
                {"kernel", report.run.kernel},
                {"obstacle", report.run.obstacle},
                {"config_hash", report.run.config_hash}};
    ojson claims = ojson::array();
    for (const auto& c : report.claims) {
        ojson constants = ojson::object();
        for (const auto& [name, value] : c.constants) constants[name] = number(value);
        claims.push_back({{"id", c.id},
                          {"anchor", c.anchor},
                          {"constants", constants},
                          {"tolerance", number(c.tolerance)},
                          {"verdict", to_string(c.verdict)},
                          {"note", c.note}});
    }
    j["claims"] = claims;
    j["overall"] = to_string(report.overall);
    j["first_failure"] = report.first_failure;
    return j.dump(2) + "\n";
}

DiagnosticsReport report_from_json(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, std::string("diagnostics report: ") + e.what());
    }
    DiagnosticsReport r;
    try {
        const auto& run = j.at("run");
        r.run.h = number_of(run.at("h"));
        r.run.dt = number_of(run.at("dt"));
        r.run.epsilon = number_of(run.at("epsilon"));
        r.run.s = number_of(run.at("s"));
        r.run.kernel = run.at("kernel").get<std::string>();
        r.run.obstacle = run.at("obstacle").get<std::string>();
        r.run.config_hash = run.at("config_hash").get<std::string>();
        for (const auto& cj : j.at("claims")) {
            ClaimResult c;
            c.id = cj.at("id").get<std::string>();
            c.anchor = cj.at("anchor").get<std::string>();
            for (const auto& [name, value] : cj.at("constants").items())
                c.constants.push_back({name, number_of(value)});
            c.tolerance = number_of(cj.at("tolerance"));
            c.verdict = verdict_from_string(cj.at("verdict").get<std::string>());
            c.note = cj.at("note").get<std::string>();
            r.claims.push_back(std::move(c));
        }
        r.overall = verdict_from_string(j.at("overall").get<std::string>());
        r.first_failure = j.at("first_failure").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, std::string("diagnostics report: ") + e.what());
    }
    return r;
}

std::vector<ClaimResult> run_all_checks(const DiagnosticsInputs& in) {
    if (!in.traj || !in.op || !in.obstacle)
        throw Error(ErrorKind::parameter, "diagnostics need a trajectory, operator and obstacle");
    if (in.traj->levels() < 3)
        throw Error(ErrorKind::parameter, "diagnostics need at least 3 time levels");
    const bool refined = in.fine_traj && in.fine_op;
    const auto d = compute_derivatives(*in.traj);
    DerivativeFields df;
    if (refined) df = compute_derivatives(*in.fine_traj);

    std::vector<ClaimResult> out;
    {
        const auto c = measure_ut_identity(*in.traj, *in.op, d, in.window);
        UtIdentityMeasure f;
        if (refined) f = measure_ut_identity(*in.fine_traj, *in.fine_op, df, in.window);
        out.push_back(check_ut_identity(c, refined ? &f : nullptr));
    }
    {
        const auto c = measure_lipschitz(*in.traj, *in.obstacle, d, in.window);
        LipschitzMeasure f;
        if (refined) f = measure_lipschitz(*in.fine_traj, *in.obstacle, df, in.window);
        out.push_back(check_lipschitz(c, refined ? &f : nullptr));
    }
    {
        const auto c = measure_semiconvexity(*in.traj, in.window);
        SemiconvexityMeasure f;
        if (refined) f = measure_semiconvexity(*in.fine_traj, in.window);
        out.push_back(check_semiconvexity(c, refined ? &f : nullptr));
    }
    {
        const auto c = measure_gradient_vs_ut(*in.traj, d, in.window, in.tol_fb);
        GradientMeasure f;
        if (refined) f = measure_gradient_vs_ut(*in.fine_traj, df, in.window, in.tol_fb);
        out.push_back(check_gradient_vs_ut(c, refined ? &f : nullptr));
    }
    {
        auto curve = extract_gamma(*in.traj, in.tol_fb);
        if (curve.size() >= 3) classify_points(curve);
        out.push_back(check_hopf_antihopf(measure_hopf_antihopf(*in.traj, curve, d, in.window)));
    }
    {
        const auto c = measure_c11(*in.traj, d, in.window, in.tol_fb);
        C11Measure f;
        if (refined) f = measure_c11(*in.fine_traj, df, in.window, in.tol_fb);
        out.push_back(check_c11(c, refined ? &f : nullptr));
    }
    out.push_back(check_monotonicity_positivity(measure_monotonicity(*in.traj)));
    return out;
}

}  // namespace nlobs
