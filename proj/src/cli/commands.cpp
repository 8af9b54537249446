#include "nlobs/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <json.hpp>

#include "nlobs/cli/artifacts.hpp"
#include "nlobs/complementarity_solver.hpp"
#include "nlobs/error.hpp"
#include "nlobs/free_boundary.hpp"
#include "nlobs/heat_kernel.hpp"
#include "nlobs/penalized_solver.hpp"

namespace nlobs::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

ojson number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

struct Claim {
    std::string id;
    Verdict verdict = Verdict::undetermined;
    std::string note;
    ojson constants = ojson::object();
};

Verdict verdict_of(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

class Stage {
public:
    Stage(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log)
        : cfg_(cfg),
          opt_(opt),
          log_(log),
          hash_(config_hash(cfg)),
          root_(opt.out_dir.empty() ? fs::path(cfg.output.directory) : opt.out_dir),
          refine_(opt.refine || cfg.analysis.refinement) {}

    const RunConfig& cfg() const { return cfg_; }
    const std::string& hash() const { return hash_; }
    bool refine() const { return refine_; }
    fs::path path(const std::string& rel) const { return root_ / rel; }

    void note(const std::string& msg) const {
        if (!opt_.quiet) log_ << msg << '\n';
    }

    void write(const std::string& rel, const std::string& content) {
        const fs::path p = path(rel);
        atomic_write(p, content);
        result_.artifacts.push_back(p);
    }

    void add(Claim c) { claims_.push_back(std::move(c)); }

    void write_summary(const std::string& rel, const std::string& command, ojson extra = ojson::object()) {
        ojson j;
        j["command"] = command;
        j["config_hash"] = hash_;
        for (auto& [k, v] : extra.items()) j[k] = v;
        ojson arr = ojson::array();
        for (const auto& c : claims_)
            arr.push_back({{"id", c.id},
                           {"verdict", to_string(c.verdict)},
                           {"note", c.note},
                           {"constants", c.constants}});
        j["claims"] = arr;
        j["overall"] = overall();
        write(rel, j.dump(2) + "\n");
    }

    std::string overall() const {
        for (const auto& c : claims_)
            if (c.verdict == Verdict::fail) return "fail";
        return "pass";
    }

    CommandResult finish() {
        for (const auto& c : claims_) {
            result_.claims.push_back({c.id, c.verdict, c.note});
            if (c.verdict == Verdict::fail && result_.first_failure.empty()) result_.first_failure = c.id;
        }
        result_.status = result_.first_failure.empty() ? 0 : 1;
        for (const auto& c : result_.claims)
            note("  " + c.id + ": " + to_string(c.verdict) + (c.note.empty() ? "" : " (" + c.note + ")"));
        return result_;
    }

private:
    const RunConfig& cfg_;
    CommandOptions opt_;
    std::ostream& log_;
    std::string hash_;
    fs::path root_;
    bool refine_;
    std::vector<Claim> claims_;
    CommandResult result_;
};

std::string primary_mode(const RunConfig& cfg) {
    return cfg.solver.mode == "penalized" ? "penalized" : "projected";
}

std::vector<std::string> modes(const RunConfig& cfg) {
    if (cfg.solver.mode == "both") return {"projected", "penalized"};
    return {cfg.solver.mode};
}

double scale_of(const std::vector<double>& phi) {
    double m = 0.0;
    for (double p : phi) m = std::max(m, std::abs(p));
    return std::max(1.0, m);
}

Trajectory run_solver(const std::string& mode, const RunConfig& cfg, const DiscreteOperator& op,
                      const GridSpec& grid, const ObstacleSpec& obstacle) {
    if (mode == "projected") {
        ProjectedConfig pc;
        pc.dt = grid.dt;
        pc.omega = cfg.solver.omega;
        pc.tol = cfg.solver.lcp_tol;
        pc.max_sweeps = cfg.solver.max_sweeps;
        return solve_obstacle(op, grid, obstacle, pc);
    }
    PenalizedConfig pc;
    pc.epsilon = cfg.solver.epsilon;
    pc.dt = grid.dt;
    pc.newton_tol = cfg.solver.newton_tol;
    pc.linear_tol = cfg.solver.linear_tol;
    return solve_penalized(op, grid, obstacle, pc);
}

std::string trajectory_file(const std::string& mode, bool fine) {
    return "solve/trajectory_" + mode + (fine ? "_fine" : "") + ".csv";
}

// Physics shared by every stage.
struct Setup {
    GridSpec grid;
    KernelSpec kernel;
    ObstacleSpec obstacle;
};

Setup setup(const RunConfig& cfg, bool fine) {
    Setup s;
    s.grid = make_grid(cfg);
    if (fine) s.grid = s.grid.refined();
    s.kernel = make_kernel(cfg);
    s.obstacle = make_obstacle(cfg, s.grid);
    return s;
}

Trajectory load_trajectory(const Stage& st, const std::string& mode, bool fine, const Setup& s,
                           const std::string& stage) {
    const fs::path p = st.path(trajectory_file(mode, fine));
    if (!fs::exists(p))
        throw Error(ErrorKind::missing_artifact,
                    stage + " needs " + p.string() + "; run solve" + (fine ? " --refine" : "") + " first");
    Trajectory tr;
    tr.grid = s.grid;
    tr.s = s.kernel.s;
    tr.phi = s.obstacle.values(s.grid);
    tr.epsilon = mode == "penalized" ? st.cfg().solver.epsilon : 0.0;
    const std::string h = read_trajectory_csv(p, tr);
    if (h != st.hash())
        throw Error(ErrorKind::missing_artifact, p.string() + " was written under config hash " + h +
                                                     ", current hash is " + st.hash() + "; rerun solve");
    if (tr.levels() != s.grid.steps() + 1)
        throw Error(ErrorKind::io, p.string() + " has the wrong number of time levels");
    return tr;
}

void write_snapshots(Stage& st, const std::string& mode, bool fine, const Trajectory& tr,
                     const DiscreteOperator& op) {
    const std::size_t K = tr.levels() - 1;
    const std::size_t count = std::min(st.cfg().output.snapshots, K + 1);
    std::vector<std::size_t> levels;
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t k = static_cast<std::size_t>(std::llround(
            static_cast<double>(j) * static_cast<double>(K) / static_cast<double>(count - 1)));
        if (levels.empty() || levels.back() != k) levels.push_back(k);
    }
    std::vector<double> x = tr.grid.nodes();
    for (std::size_t k : levels) {
        const auto snap = tr.snapshot(k, &op);
        st.write("solve/snapshots/" + mode + (fine ? "_fine" : "") + "_t" + format_fixed(tr.t[k], 6) + ".csv",
                 csv_text(st.hash(), {"x", "u", "v", "Lu", "ut"}, {x, snap.u, snap.v, snap.Lu, snap.ut}));
    }
}

void solve_claims(Stage& st, const std::string& label, const std::string& mode, const Trajectory& tr) {
    Claim valid{"solve." + label + ".valid", verdict_of(tr.valid), tr.failure};
    st.add(valid);
    if (mode != "projected") return;
    const double scale = scale_of(tr.phi);
    double min_gap = 0.0, max_res = 0.0;
    for (std::size_t k = 0; k < tr.levels(); ++k)
        for (std::size_t i = 0; i < tr.nodes(); ++i) min_gap = std::min(min_gap, tr.v(k, i));
    for (double r : tr.residual) max_res = std::max(max_res, r);
    Claim feas{"solve." + label + ".feasible", verdict_of(min_gap >= 0.0), ""};
    feas.constants["min_u_minus_phi"] = min_gap;
    st.add(feas);
    Claim comp{"solve." + label + ".complementarity", verdict_of(max_res <= 1e-8 * scale), ""};
    comp.constants["max_residual"] = max_res;
    comp.constants["tolerance"] = 1e-8 * scale;
    st.add(comp);
}

CommandResult cmd_solve(Stage& st) {
    const auto& cfg = st.cfg();
    st.write("config.json", echo_config(cfg));
    ojson runs = ojson::array();
    auto one = [&](bool fine, const std::vector<std::string>& which) {
        const Setup s = setup(cfg, fine);
        const auto op = build_discrete_operator(s.kernel, s.grid);
        for (const auto& mode : which) {
            st.note("solve: " + mode + (fine ? " (refined)" : "") + " n = " + std::to_string(s.grid.n_points) +
                    ", dt = " + format_number(s.grid.dt));
            const Trajectory tr = run_solver(mode, cfg, op, s.grid, s.obstacle);
            st.write(trajectory_file(mode, fine), trajectory_csv(st.hash(), tr));
            if (cfg.wants("csv")) write_snapshots(st, mode, fine, tr, op);
            const std::string label = mode + (fine ? "_fine" : "");
            solve_claims(st, label, mode, tr);
            runs.push_back({{"name", label},
                            {"h", s.grid.spacing()},
                            {"dt", s.grid.dt},
                            {"levels", tr.levels()},
                            {"epsilon", tr.epsilon},
                            {"valid", tr.valid},
                            {"warnings", tr.warnings}});
        }
    };
    one(false, modes(cfg));
    if (st.refine()) one(true, {primary_mode(cfg)});
    st.write_summary("solve/summary.json", "solve", {{"runs", runs}});
    return st.finish();
}

CommandResult cmd_verify(Stage& st) {
    const auto& cfg = st.cfg();
    const std::string mode = primary_mode(cfg);
    const Setup s = setup(cfg, false);
    const Trajectory tr = load_trajectory(st, mode, false, s, "verify");
    const auto op = build_discrete_operator(s.kernel, s.grid);

    DiagnosticsInputs in;
    in.traj = &tr;
    in.op = &op;
    in.obstacle = &s.obstacle;
    in.window = {cfg.analysis.t1, cfg.analysis.t2, cfg.analysis.edge_fraction};
    in.tol_fb = cfg.analysis.tol_fb;

    Trajectory fine;
    DiscreteOperator fine_op;
    Setup sf;
    if (st.refine()) {
        sf = setup(cfg, true);
        fine = load_trajectory(st, mode, true, sf, "verify --refine");
        fine_op = build_discrete_operator(sf.kernel, sf.grid);
        in.fine_traj = &fine;
        in.fine_op = &fine_op;
    }
    st.note("verify: " + std::string(st.refine() ? "with" : "without") + " refinement run");
    RunMetadata meta;
    meta.h = s.grid.spacing();
    meta.dt = s.grid.dt;
    meta.epsilon = tr.epsilon;
    meta.s = s.kernel.s;
    meta.kernel = cfg.kernel.kind;
    meta.obstacle = cfg.obstacle.family;
    meta.config_hash = st.hash();
    const auto report = assemble_report(meta, run_all_checks(in));
    st.write("verify/diagnostics.json", report_to_json(report));
    const auto holder = measure_ut_holder(tr, compute_derivatives(tr), s.obstacle, in.window);
    ojson hj = {{"config_hash", st.hash()},
                {"alpha", holder.alpha},
                {"phi_lipschitz", holder.phi_lipschitz},
                {"max", holder.max},
                {"ratio_to_phi_lipschitz", holder.max / holder.phi_lipschitz},
                {"times", holder.times},
                {"seminorm", holder.seminorm}};
    st.write("verify/ut_holder.json", hj.dump(2) + "\n");
    for (const auto& c : report.claims) st.add({c.id, c.verdict, c.note, ojson::object()});
    return st.finish();
}

const char* label_name(PointLabel l) { return to_string(l); }

ojson fit_json(const ExpansionFit& f, const std::string& hash) {
    ojson steps = ojson::array();
    for (std::size_t j = 0; j < f.scales.size(); ++j)
        steps.push_back({{"scale", f.scales[j]}, {"max_residual", f.max_residuals[j]}});
    return {{"config_hash", hash},
            {"x0", f.x0},
            {"t0", f.t0},
            {"c0", f.c0},
            {"a", f.a},
            {"residual_exponent", number(f.residual_exponent.slope)},
            {"residual_exponent_half_width", number(f.residual_exponent.slope_half_width)},
            {"goodness", number(f.goodness)},
            {"grad_gamma", number(f.grad_gamma)},
            {"c0_from_utt", number(f.c0_from_utt)},
            {"a_consistent", f.a_consistent},
            {"c0_consistent", f.c0_consistent},
            {"rx", f.rx},
            {"rt", f.rt},
            {"windows", steps}};
}

CommandResult cmd_fb(Stage& st) {
    const auto& cfg = st.cfg();
    const std::string mode = primary_mode(cfg);
    const Setup s = setup(cfg, false);
    const Trajectory tr = load_trajectory(st, mode, false, s, "fb");
    const double tol_fb = mode == "penalized"
                              ? std::max(cfg.analysis.tol_fb,
                                         default_fb_tolerance(cfg.solver.lcp_tol, cfg.solver.epsilon, [&] {
                                             const auto op = build_discrete_operator(s.kernel, s.grid);
                                             double m = 0.0;
                                             for (double v : s.obstacle.Lphi(op, s.grid)) m = std::max(m, std::abs(v));
                                             return m;
                                         }()))
                              : cfg.analysis.tol_fb;

    auto curve = extract_gamma(tr, tol_fb);
    Classification cl;
    if (curve.size() >= 3) cl = classify_points(curve);
    if (cfg.wants("csv")) {
        std::string csv = "# config_hash " + st.hash() + "\nx,gamma,grad_gamma,label\n";
        for (std::size_t p = 0; p < curve.size(); ++p)
            csv += format_number(curve.x[p]) + "," + format_number(curve.gamma[p]) + "," +
                   format_number(curve.grad_gamma[p]) + "," + label_name(curve.labels[p]) + "\n";
        st.write("fb/curve.csv", csv);
    }

    Claim graph{"fb.graph", verdict_of(curve.graph_ok), ""};
    graph.constants["samples"] = curve.size();
    graph.constants["violations"] = curve.violations;
    graph.constants["checked"] = curve.checked;
    st.add(graph);

    Trajectory fine;
    FreeBoundaryCurve fine_curve;
    Classification fine_cl;
    GridSpec fine_grid;
    if (st.refine()) {
        const Setup sf = setup(cfg, true);
        fine_grid = sf.grid;
        fine = load_trajectory(st, mode, true, sf, "fb --refine");
        fine_curve = extract_gamma(fine, tol_fb);
        if (fine_curve.size() >= 3) fine_cl = classify_points(fine_curve);
    }

    Claim lip{"fb.lipschitz", Verdict::undetermined, ""};
    Claim holder{"fb.holder", Verdict::undetermined, ""};
    if (curve.size() >= 32) {
        const auto rf = lipschitz_and_holder_fit(curve);
        lip.constants["lipschitz"] = number(rf.lipschitz);
        if (!std::isfinite(rf.lipschitz)) {
            lip.verdict = Verdict::fail;
        } else if (st.refine() && fine_curve.size() >= 32) {
            const auto ff = lipschitz_and_holder_fit(fine_curve);
            lip.constants["lipschitz_fine"] = number(ff.lipschitz);
            const double ratio = ff.lipschitz / rf.lipschitz;
            lip.constants["ratio"] = number(ratio);
            lip.verdict = verdict_of(std::abs(ratio - 1.0) <= 0.25);
        } else {
            lip.note = "no refinement run";
        }
        holder.constants["alpha"] = number(rf.alpha.slope);
        holder.constants["alpha_half_width"] = number(rf.alpha.slope_half_width);
        if (rf.alpha_determined)
            holder.verdict = verdict_of(rf.alpha.lower() >= 0.25);
        else
            holder.note = "separations span less than one decade";
    } else {
        lip.note = holder.note = "fewer than 32 curve samples";
    }
    st.add(lip);
    st.add(holder);

    Claim cls{"fb.classification", Verdict::undetermined, ""};
    cls.constants["tol_grad"] = number(cl.tol_grad);
    cls.constants["regular"] = cl.regular;
    cls.constants["singular"] = cl.singular;
    cls.constants["undetermined"] = cl.undetermined;
    if (curve.size() >= 3) {
        bool apex = false;
        for (std::size_t p = 0; p < curve.size(); ++p) {
            if (curve.labels[p] != PointLabel::singular) continue;
            const bool left = p > 0 && curve.nodes[p - 1] + 1 == curve.nodes[p];
            const bool right = p + 1 < curve.size() && curve.nodes[p + 1] == curve.nodes[p] + 1;
            if (left && right && curve.gamma[p] <= curve.gamma[p - 1] && curve.gamma[p] <= curve.gamma[p + 1])
                apex = true;
        }
        cls.constants["apex_singular"] = apex;
        cls.constants["regular_open"] = cl.regular_open;
        cls.verdict = verdict_of(cl.regular_open && cl.regular > 0 && (apex || cl.singular == 0));
        if (!apex && cl.singular == 0) cls.note = "no interior minimum of Gamma";
    } else {
        cls.note = "fewer than 3 curve samples";
    }
    st.add(cls);

    Claim slice{"fb.singular_slices", Verdict::undetermined, ""};
    const auto sm = singular_slice_measure(curve, tr);
    slice.constants["median"] = sm.median;
    slice.constants["max"] = sm.max;
    if (st.refine()) {
        const auto smf = singular_slice_measure(fine_curve, fine);
        slice.constants["median_fine"] = smf.median;
        slice.constants["max_fine"] = smf.max;
        slice.verdict = verdict_of(slice_measure_refines(sm, smf));
    } else {
        slice.note = "no refinement run";
    }
    st.add(slice);

    // expansions are fitted on the finest run available
    const Trajectory& ftr = st.refine() ? fine : tr;
    const FreeBoundaryCurve& fcurve = st.refine() ? fine_curve : curve;
    const double ftol = st.refine() ? fine_cl.tol_grad : cl.tol_grad;
    const GridSpec& fgrid = st.refine() ? fine_grid : s.grid;
    std::vector<std::size_t> samples;
    if (cfg.analysis.fit_points.empty()) {
        samples = fit_candidates(fcurve, fgrid.dt);
    } else {
        for (double x : cfg.analysis.fit_points) {
            const std::size_t p = fcurve.sample_of(fgrid.index_of(x));
            if (p != FreeBoundaryCurve::npos) samples.push_back(p);
        }
    }
    Claim exp{"fb.expansion", Verdict::undetermined, ""};
    std::size_t fitted = 0, passed = 0, index = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t p : samples) {
        const std::string rel = "fb/expansion_" + std::to_string(index++) + ".json";
        try {
            const auto f = expansion_fit(ftr, fcurve, p, expansion_window(fcurve, p, fgrid.dt), ftol);
            ++fitted;
            const bool ok = f.c0 > 0.0 && f.a_consistent && f.residual_exponent.lower() > 2.0;
            if (ok) ++passed;
            worst = std::min(worst, f.residual_exponent.lower());
            auto j = fit_json(f, st.hash());
            j["pass"] = ok;
            st.write(rel, j.dump(2) + "\n");
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::fit) throw;
            ojson j = {{"config_hash", st.hash()}, {"x0", fcurve.x[p]}, {"t0", fcurve.gamma[p]}, {"error", e.what()}};
            st.write(rel, j.dump(2) + "\n");
        }
    }
    exp.constants["refined"] = st.refine();
    exp.constants["requested"] = samples.size();
    exp.constants["fitted"] = fitted;
    exp.constants["passed"] = passed;
    exp.constants["min_exponent_lower"] = number(worst);
    if (fitted == 0)
        exp.note = "no admissible fit point";
    else
        exp.verdict = verdict_of(passed == fitted);
    st.add(exp);

    st.write_summary("fb/summary.json", "fb", {{"tol_fb", tol_fb}});
    return st.finish();
}

CommandResult cmd_kernel_check(Stage& st) {
    const auto& cfg = st.cfg();
    const double s = cfg.kernel.s;
    const double alpha = 2.0 * s;
    const bool cauchy = s == 0.5;
    GridSpec g;
    HeatKernelOptions o;
    o.with_weights = false;
    if (cauchy) {
        g.R_dom = 400.0;
        g.n_points = 16001;
    } else {
        // nodes at x = t^{1/2s} put the envelope kink on the grid
        g.R_dom = 20.0;
        g.n_points = 4001;
        o.tail_tol = 1e-3;
    }
    const std::vector<double> times = {0.1, 0.2, 0.4};
    std::vector<BoundFit> fits;
    double golden = 0.0, mass_err = 0.0;
    bool mass_determined = true;
    constexpr std::size_t max_mass_points = (1u << 18) + 1;
    const auto x = g.nodes();
    for (double t : times) {
        st.note("kernel-check: s = " + format_fixed(s, 4) + ", t = " + format_fixed(t, 3));
        const auto p = fractional_heat_kernel(s, t, g, o);
        fits.push_back(kernel_bound_fit(p));
        std::vector<double> env(x.size()), ref(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double ax = std::abs(x[i]);
            env[i] = std::min(std::pow(t, -1.0 / alpha), ax > 0.0 ? t * std::pow(ax, -1.0 - 2.0 * s)
                                                                 : std::numeric_limits<double>::infinity());
            ref[i] = t / (std::numbers::pi * (t * t + x[i] * x[i]));
            if (cauchy) golden = std::max(golden, std::abs(p.values[i] - ref[i]));
        }
        if (cauchy) {
            const double inside = 1.0 - 2.0 * stable_tail(g.R_dom / t, alpha);
            mass_err = std::max(mass_err, std::abs(p.mass() - inside));
        } else if (mass_determined) {
            // trapezoid mass needs h well below the kernel scale t^{1/2s}
            GridSpec mg = g;
            const double h = std::min(g.spacing(), std::pow(t, 1.0 / alpha) / 32.0);
            mg.n_points = 2 * static_cast<std::size_t>(std::ceil(g.R_dom / h)) + 1;
            if (mg.n_points > max_mass_points) {
                mass_determined = false;
            } else {
                const double inside = 1.0 - 2.0 * stable_tail(g.R_dom * std::pow(t, -1.0 / alpha), alpha);
                mass_err = std::max(mass_err, std::abs(fractional_heat_kernel(s, t, mg, o).mass() - inside));
            }
        }
        if (cfg.wants("csv")) {
            std::vector<std::string> header = {"x", "p", "envelope"};
            std::vector<std::vector<double>> cols = {x, p.values, env};
            if (cauchy) {
                header.push_back("cauchy");
                cols.push_back(ref);
            }
            st.write("kernel-check/kernel_t" + format_fixed(t, 6) + ".csv", csv_text(st.hash(), header, cols));
        }
    }
    if (cauchy) {
        Claim gold{"kernel.cauchy_golden", verdict_of(golden <= 1e-4), ""};
        gold.constants["sup_error"] = golden;
        st.add(gold);
    }
    Claim mass{"kernel.mass", verdict_of(mass_err <= 1e-3), ""};
    mass.constants["max_error"] = mass_err;
    if (!mass_determined) {
        mass.verdict = Verdict::undetermined;
        mass.note = "kernel scale below the finest mass grid";
    }
    st.add(mass);
    const auto stab = kernel_bound_stability(fits);
    Claim env{"kernel.envelope", verdict_of(stab.pass), ""};
    for (const auto& f : stab.fits) {
        env.constants["c1_t" + format_fixed(f.t, 6)] = f.c1;
        env.constants["c2_t" + format_fixed(f.t, 6)] = f.c2;
    }
    env.constants["ratio_min"] = stab.ratio_min;
    env.constants["ratio_max"] = stab.ratio_max;
    st.add(env);
    st.write_summary("kernel-check/verdicts.json", "kernel-check",
                     {{"s", s}, {"R_dom", g.R_dom}, {"n_points", g.n_points}});
    return st.finish();
}

CommandResult cmd_epsilon_study(Stage& st) {
    const auto& cfg = st.cfg();
    const Setup s = setup(cfg, false);
    const auto op = build_discrete_operator(s.kernel, s.grid);
    st.note("epsilon-study: projected reference");
    const Trajectory ref = run_solver("projected", cfg, op, s.grid, s.obstacle);
    EpsilonStudyOptions eo;
    eo.t1 = cfg.analysis.t1;
    eo.t2 = cfg.analysis.t2;
    eo.base.dt = s.grid.dt;
    eo.base.newton_tol = cfg.solver.newton_tol;
    eo.base.linear_tol = cfg.solver.linear_tol;
    st.note("epsilon-study: " + std::to_string(cfg.solver.epsilon_list.size()) + " penalized runs");
    const auto study = epsilon_study(op, s.grid, s.obstacle, cfg.solver.epsilon_list, ref, eo);
    if (cfg.wants("csv")) {
        std::vector<std::vector<double>> cols(5);
        for (const auto& r : study.rows) {
            cols[0].push_back(r.epsilon);
            cols[1].push_back(r.dt);
            cols[2].push_back(r.gap_next);
            cols[3].push_back(r.gap_reference);
            cols[4].push_back(r.constant);
        }
        st.write("epsilon-study/convergence.csv",
                 csv_text(st.hash(), {"epsilon", "dt", "gap_next", "gap_reference", "constant"}, cols));
    }
    Claim c{"epsilon.convergence", verdict_of(study.pass), ""};
    c.constants["order"] = study.order.slope;
    c.constants["order_half_width"] = study.order.slope_half_width;
    c.constants["monotone_reference"] = study.monotone_reference;
    c.constants["monotone_next"] = study.monotone_next;
    st.add(c);
    st.write_summary("epsilon-study/summary.json", "epsilon-study");
    return st.finish();
}

CommandResult cmd_report(Stage& st) {
    const std::vector<std::pair<std::string, std::string>> sources = {
        {"solve", "solve/summary.json"},
        {"verify", "verify/diagnostics.json"},
        {"fb", "fb/summary.json"},
        {"kernel-check", "kernel-check/verdicts.json"},
        {"epsilon-study", "epsilon-study/summary.json"}};
    std::string text = "config_hash " + st.hash() + "\n";
    std::size_t found = 0;
    for (const auto& [name, rel] : sources) {
        const fs::path p = st.path(rel);
        if (!fs::exists(p)) continue;
        ++found;
        const auto j = ojson::parse(read_file(p));
        const std::string h = j.contains("config_hash") ? j["config_hash"].get<std::string>()
                                                        : j["run"]["config_hash"].get<std::string>();
        text += "\n[" + name + "]" + (h == st.hash() ? "" : " (stale: config hash " + h + ")") + "\n";
        for (const auto& c : j.at("claims")) {
            const std::string id = c.at("id").get<std::string>();
            const Verdict v = verdict_from_string(c.at("verdict").get<std::string>());
            const std::string note = c.at("note").get<std::string>();
            text += "  " + id + std::string(id.size() < 40 ? 40 - id.size() : 1, ' ') + to_string(v) +
                    (note.empty() ? "" : "  " + note) + "\n";
            if (h == st.hash()) st.add({name + ":" + id, v, note, ojson::object()});
        }
    }
    if (found == 0)
        throw Error(ErrorKind::missing_artifact, "report found no stage output under " + st.path("").string());
    text += "\noverall " + st.overall() + "\n";
    st.write("report/summary.txt", text);
    return st.finish();
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"solve", "verify", "fb", "kernel-check", "epsilon-study",
                                                   "report"};
    return names;
}

CommandResult run_command(const std::string& name, const RunConfig& config, const CommandOptions& options,
                          std::ostream& log) {
    Stage st(config, options, log);
    if (name == "solve") return cmd_solve(st);
    if (name == "verify") return cmd_verify(st);
    if (name == "fb") return cmd_fb(st);
    if (name == "kernel-check") return cmd_kernel_check(st);
    if (name == "epsilon-study") return cmd_epsilon_study(st);
    if (name == "report") return cmd_report(st);
    throw Error(ErrorKind::parameter, "unknown subcommand '" + name + "'");
}

}  // namespace nlobs::cli
