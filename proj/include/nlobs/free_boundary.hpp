#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "nlobs/obstacle.hpp"
#include "nlobs/regression.hpp"

namespace nlobs {

enum class PointLabel { regular, singular, undetermined };

const char* to_string(PointLabel label) noexcept;

/// Detachment times t = Gamma(x) of the nodes still in contact after the
/// first step that leave it before T. Samples are ordered by node; `components` holds
/// [begin, end) ranges of samples on consecutive nodes.
struct FreeBoundaryCurve {
    std::vector<std::size_t> nodes;
    std::vector<double> x;
    std::vector<double> gamma;
    std::vector<double> grad_gamma;
    std::vector<PointLabel> labels;
    std::vector<std::pair<std::size_t, std::size_t>> components;
    double tol_fb = 0.0;
    double spacing = 0.0;
    double T = 0.0;

    /// Per grid node: first level with v > tol_fb. 0 for nodes detached from
    /// the start, levels() for nodes still in contact at T.
    std::vector<std::size_t> first_detached;
    std::size_t violations = 0;  // re-contact events after detachment
    std::size_t checked = 0;     // node-level pairs examined
    bool graph_ok = true;

    std::size_t size() const { return x.size(); }
    /// Sample index of grid node i, or npos.
    std::size_t sample_of(std::size_t node) const;
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
};

/// 10 max(complementarity tolerance, epsilon ln^+ |L phi|_inf).
double default_fb_tolerance(double complementarity_tol, double epsilon, double Lphi_sup);

/// Gamma(x) is the time at which v(x, .) crosses tol_fb. sqrt(v) is
/// extrapolated linearly from the first two detached levels (exact for
/// quadratic detachment) and the crossing clamped to the bracketing step;
/// with a single detached level the bracket is interpolated in sqrt(v). The graph check
/// counts levels with v <= tol_fb after the first detachment; more than 0.1%
/// of the examined samples fails it.
FreeBoundaryCurve extract_gamma(const Trajectory& traj, double tol_fb);

struct RegularityFit {
    double lipschitz = 0.0;
    LineFit alpha;  // slope of log sup |secant slope increment| vs log separation
    bool alpha_determined = false;
    std::vector<double> separations;
    std::vector<double> oscillations;
};

/// Needs at least 32 samples. The gradient increment at separation d is
/// sup |Gamma(x+d) - 2 Gamma(x) + Gamma(x-d)| / d over dyadic d up to a quarter
/// of the longest component; the Holder fit is undetermined below one decade.
RegularityFit lipschitz_and_holder_fit(const FreeBoundaryCurve& curve);

struct Classification {
    double tol_grad = 0.0;
    double grad_noise = 0.0;
    std::size_t regular = 0;
    std::size_t singular = 0;
    std::size_t undetermined = 0;
    bool regular_open = true;
};

/// Labels samples by |dGamma| against tol_grad. A NaN tol_grad is replaced
/// by 3x the gradient noise, estimated as median |third difference| / (2h).
/// Samples without two curve neighbours stay undetermined.
Classification classify_points(FreeBoundaryCurve& curve,
                               double tol_grad = std::numeric_limits<double>::quiet_NaN());

struct ExpansionOptions {
    double rx = 0.0;  // base half-width in x, at least 4h
    double rt = 0.0;  // base half-height in t, at least 4 dt
    int windows = 3;  // dyadic window count for the residual exponent
};

struct ExpansionFit {
    double x0 = 0.0;
    double t0 = 0.0;
    double c0 = 0.0;
    double a = 0.0;
    double rx = 0.0;
    double rt = 0.0;
    LineFit residual_exponent;
    double curvature = 0.0;  // nuisance b of the front t = a x + b x^2
    double goodness = 0.0;   // relative l2 residual of c0 (t - a x)_+^2 on the base window
    double grad_gamma = 0.0;
    double c0_from_utt = 0.0;
    bool a_consistent = false;   // |a - dGamma| <= 0.2 max(|dGamma|, tol_grad)
    bool c0_consistent = false;  // |c0 - u_tt / 2| <= 0.3 c0
    std::vector<double> scales;
    std::vector<double> max_residuals;
};

/// Least squares v ~ c0 (t - a x - b x^2)_+^2 in local coordinates about
/// (x0, Gamma(x0)); c0 is eliminated, a and b are found by nested scanned
/// golden-section searches. Residuals are those of c0 (t - a x)_+^2.
/// Throws Error(fit) when a window has no contact or no detached data.
ExpansionFit expansion_fit(const Trajectory& traj, const FreeBoundaryCurve& curve, std::size_t sample,
                           const ExpansionOptions& options, double tol_grad = 0.0);

/// Base window rx = 4h, rt = max(4 dt, |dGamma| rx) with three dyadic windows.
ExpansionOptions expansion_window(const FreeBoundaryCurve& curve, std::size_t sample, double dt);

/// Regular samples whose largest window stays inside the x-span of their
/// component and inside (0, T), at most `max_points` spread evenly.
std::vector<std::size_t> fit_candidates(const FreeBoundaryCurve& curve, double dt,
                                        std::size_t max_points = 8);

struct SliceMeasure {
    std::vector<double> times;
    std::vector<double> fraction;  // singular free-boundary cells / grid cells
    double median = 0.0;
    double max = 0.0;
    double noise = 0.0;  // one cell
};

SliceMeasure singular_slice_measure(const FreeBoundaryCurve& curve, const Trajectory& traj);

/// Refinement verdict: the fine median at most half the coarse one, up to
/// one fine cell.
bool slice_measure_refines(const SliceMeasure& coarse, const SliceMeasure& fine);

}  // namespace nlobs
