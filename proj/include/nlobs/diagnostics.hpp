#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nlobs/free_boundary.hpp"
#include "nlobs/nonlocal_operator.hpp"
#include "nlobs/obstacle.hpp"
#include "nlobs/regression.hpp"

namespace nlobs {

enum class Verdict { pass, fail, undetermined };

const char* to_string(Verdict verdict) noexcept;
Verdict verdict_from_string(const std::string& name);

/// Finite differences of a trajectory, stored level-major (k * nodes + i).
/// Central first differences and second differences are defined for
/// 1 <= k <= levels - 2 and 1 <= i <= nodes - 2; other entries are NaN.
struct DerivativeFields {
    std::size_t levels = 0;
    std::size_t nodes = 0;
    double h = 0.0;
    double dt = 0.0;
    std::vector<double> ut;
    std::vector<double> ux;
    std::vector<double> uxx;
    std::vector<double> utt;
    std::vector<double> uxt;

    std::size_t index(std::size_t k, std::size_t i) const { return k * nodes + i; }
    bool interior(std::size_t k, std::size_t i) const {
        return k >= 1 && k + 1 < levels && i >= 1 && i + 1 < nodes;
    }
};

DerivativeFields compute_derivatives(const Trajectory& traj);

/// Level range [first, last] with t1 <= t_k <= t2, clipped to interior levels.
std::pair<std::size_t, std::size_t> window_levels(const Trajectory& traj, double t1, double t2);

/// Named constant in a claim entry.
using Constants = std::vector<std::pair<std::string, double>>;

struct ClaimResult {
    std::string id;
    std::string anchor;
    Constants constants;
    double tolerance = 0.0;
    Verdict verdict = Verdict::undetermined;
    std::string note;

    double constant(const std::string& name) const;
};

/// Time window [t1, t2] and the spatial region |x| <= (1 - edge_fraction) R_dom
/// used by the sup-norm checks; the excluded strip holds the boundary layer of
/// the zero-extension closure.
struct AnalysisWindow {
    double t1 = 0.2;
    double t2 = 0.8;
    double edge_fraction = 0.25;

    bool contains_x(double x, double R_dom) const {
        return std::abs(x) <= (1.0 - edge_fraction) * R_dom + 1e-12;
    }
};

/// Refinement tolerance shared by the stability checks: fine/coarse <= 1.3.
inline constexpr double refinement_ratio_limit = 1.3;
/// Relative band for constants that must be stable within 25%.
inline constexpr double refinement_band = 0.25;

struct UtIdentityMeasure {
    double residual = 0.0;           // sup |u_t - max(-Lu, 0)| on the window, central u_t
    double constant = 0.0;           // residual / (h + dt)
    double contact_min_Lu = 0.0;     // min Lu over the contact interior, all times
    double detached_residual = 0.0;  // sup |backward u_t + Lu| over detached nodes
    double scale = 1.0;
    double h = 0.0;
    double dt = 0.0;
};

UtIdentityMeasure measure_ut_identity(const Trajectory& traj, const DiscreteOperator& op,
                                      const DerivativeFields& d, const AnalysisWindow& window);
/// Pass iff the exact parts hold within tol * scale and the constant is stable
/// under one refinement; undetermined without a fine run.
ClaimResult check_ut_identity(const UtIdentityMeasure& coarse, const UtIdentityMeasure* fine,
                              double tol = 1e-8);

struct LipschitzMeasure {
    double max_grad = 0.0;
    double max_ut = 0.0;
    double max_u = 0.0;
    double phi_lipschitz = 0.0;
    double phi_sup = 0.0;
    double scale = 1.0;
};

LipschitzMeasure measure_lipschitz(const Trajectory& traj, const ObstacleSpec& obstacle,
                                   const DerivativeFields& d, const AnalysisWindow& window = {});
/// max|grad u| <= Lip(phi) + grad_slack and max|u| <= |phi|_inf + tol * scale;
/// max|u_t| stable under refinement (ratio within 1.3 either way).
ClaimResult check_lipschitz(const LipschitzMeasure& coarse, const LipschitzMeasure* fine,
                            double grad_slack = 0.05, double tol = 1e-8);

struct SemiconvexityMeasure {
    double C_hat = 0.0;
    double theta = 0.0;  // direction attaining the minimum
    double t = 0.0;
    double x = 0.0;
    std::size_t directions = 8;
};

/// Lattice step (m h, l dt) of the direction fan.
struct LatticeDirection {
    int m = 1;
    int l = 0;
};

/// Eight space-time directions including pure x (1, 0) and pure t (0, 1).
const std::vector<LatticeDirection>& semiconvexity_fan();

/// (u(p + e) - 2 u(p) + u(p - e)) / |e|^2 for the physical step e = (m h, l dt).
double lattice_second_difference(const Trajectory& traj, std::size_t k, std::size_t i,
                                 LatticeDirection e);

/// C_hat = -min of the lattice second differences over the fan, the window
/// and the analysis region (clamped at zero).
SemiconvexityMeasure measure_semiconvexity(const Trajectory& traj, const AnalysisWindow& window);
ClaimResult check_semiconvexity(const SemiconvexityMeasure& coarse,
                                const SemiconvexityMeasure* fine);

struct GradientMeasure {
    double C = 0.0;
    double noise = 0.0;
    std::size_t admissible = 0;
    std::size_t excluded = 0;
    double t = 0.0;
    double x = 0.0;
};

/// Ratio |grad v| / v_t over nodes whose difference stencil lies in the
/// detached set and where v_t exceeds the noise floor.
GradientMeasure measure_gradient_vs_ut(const Trajectory& traj, const DerivativeFields& d,
                                       const AnalysisWindow& window, double tol_fb);
ClaimResult check_gradient_vs_ut(const GradientMeasure& coarse, const GradientMeasure* fine);

struct RatePoint {
    double x0 = 0.0;
    double t0 = 0.0;
    PointLabel label = PointLabel::undetermined;
    std::size_t samples = 0;
    LineFit p;  // v_t ~ tau^p
    LineFit q;  // v ~ tau^q
    double c0_lower = 0.0;  // min v_t / tau
    double M_upper = 0.0;   // max v_t / tau
    bool determined = false;
    bool pass = false;
};

struct RateMeasure {
    std::vector<RatePoint> points;
    double tau_max = 0.0;
    std::size_t determined = 0;
    std::size_t passed = 0;
    bool apex_tested = false;
};

struct RateOptions {
    double tau_max = 0.0;           // 0: 16 dt
    std::size_t min_samples = 8;
    std::size_t max_points = 9;
};

/// Hopf / anti-Hopf rates at free-boundary samples: the apex (minimum of Gamma
/// on the inner component) plus regular samples with Gamma in the window.
RateMeasure measure_hopf_antihopf(const Trajectory& traj, const FreeBoundaryCurve& curve,
                                  const DerivativeFields& d, const AnalysisWindow& window,
                                  const RateOptions& options = {});
/// Rates at explicitly chosen samples.
RatePoint rate_at(const Trajectory& traj, const FreeBoundaryCurve& curve,
                  const DerivativeFields& d, std::size_t sample, double tau_max,
                  std::size_t min_samples = 8);
/// Pass iff at least 5 points are determined, the apex is among them and
/// every determined point has p in [0.8, 1.2], q in [1.8, 2.2] (intervals)
/// and a positive band.
ClaimResult check_hopf_antihopf(const RateMeasure& measure);

struct C11Measure {
    double sup_xx = 0.0;
    double sup_xt = 0.0;
    double sup_tt = 0.0;
    double sup_third = 0.0;  // max |third x-difference| / h^3 on stencils straddling Gamma
};

C11Measure measure_c11(const Trajectory& traj, const DerivativeFields& d,
                       const AnalysisWindow& window, double tol_fb);
/// Second-difference ratios fine/coarse <= 1.3; the third-difference ratio
/// must exceed 1.3 (the optimality witness).
ClaimResult check_c11(const C11Measure& coarse, const C11Measure* fine);

struct MonotonicityMeasure {
    double min_ut_detached = 0.0;
    double min_ut_all = 0.0;
    double bound_detached = 0.0;  // -10 (h + dt) scale
    double scale = 1.0;
};

/// Backward-difference u_t over all steps.
MonotonicityMeasure measure_monotonicity(const Trajectory& traj);
ClaimResult check_monotonicity_positivity(const MonotonicityMeasure& measure, double tol = 1e-8);

/// Holder seminorm of u_t with exponent 1 - 2s in the initial layer
/// (0, t1), over separations of 1 to max_cells cells. Data only.
struct UtHolderData {
    double alpha = 0.0;
    std::vector<double> times;
    std::vector<double> seminorm;
    double max = 0.0;
    double phi_lipschitz = 0.0;
};

UtHolderData measure_ut_holder(const Trajectory& traj, const DerivativeFields& d, const ObstacleSpec& obstacle,
                               const AnalysisWindow& window, std::size_t max_cells = 64);

struct RunMetadata {
    double h = 0.0;
    double dt = 0.0;
    double epsilon = 0.0;
    double s = 0.0;
    std::string kernel;
    std::string obstacle;
    std::string config_hash;
};

struct DiagnosticsReport {
    RunMetadata run;
    std::vector<ClaimResult> claims;
    Verdict overall = Verdict::undetermined;
    std::string first_failure;
};

/// Claim ids in report order.
const std::vector<std::string>& claim_registry();
const std::string& claim_anchor(const std::string& id);

/// Orders claims by the registry. Throws Error(assembly) when a registry
/// claim is missing, duplicated or unknown. Overall passes iff no claim failed.
DiagnosticsReport assemble_report(const RunMetadata& run, std::vector<ClaimResult> claims);

std::string report_to_json(const DiagnosticsReport& report);
DiagnosticsReport report_from_json(const std::string& text);

struct DiagnosticsInputs {
    const Trajectory* traj = nullptr;
    const DiscreteOperator* op = nullptr;
    const Trajectory* fine_traj = nullptr;
    const DiscreteOperator* fine_op = nullptr;
    const ObstacleSpec* obstacle = nullptr;
    AnalysisWindow window;
    double tol_fb = 1e-9;
};

/// Runs every registry check (refinement checks use the fine run when given).
std::vector<ClaimResult> run_all_checks(const DiagnosticsInputs& in);

}  // namespace nlobs
