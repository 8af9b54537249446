#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlobs/cli/artifacts.hpp"
#include "nlobs/cli/commands.hpp"
#include "nlobs/cli/config.hpp"
#include "nlobs/complementarity_solver.hpp"
#include "nlobs/error.hpp"
#include "nlobs/free_boundary.hpp"
#include "nlobs/nonlocal_operator.hpp"
#include "symbol_oracle.hpp"

using namespace nlobs;
using namespace nlobs::cli;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Clock {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v, int digits = 4) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

ojson load(const fs::path& p) { return ojson::parse(read_file(p)); }

const ojson& claim(const ojson& summary, const std::string& id) {
    for (const auto& c : summary.at("claims"))
        if (c.at("id") == id) return c;
    throw Error(ErrorKind::missing_artifact, "claim " + id + " not found");
}

bool passed(const ojson& c) { return c.at("verdict") == "pass"; }

double constant(const ojson& c, const std::string& name) {
    const auto& k = c.at("constants");
    if (!k.contains(name) || k.at(name).is_null()) return NAN;
    if (k.at(name).is_boolean()) return k.at(name).get<bool>() ? 1.0 : 0.0;
    return k.at(name).get<double>();
}

// Shared pipeline on the default three-bump scenario with refinement.
struct Pipeline {
    fs::path dir;
    RunConfig cfg;
    ojson solve, verify, fb;
    std::vector<ojson> expansions;
};

Pipeline& pipeline() {
    static Pipeline p = [] {
        Pipeline q;
        q.dir = fs::temp_directory_path() / "nlobs_acceptance" / "scenario";
        fs::remove_all(q.dir);
        q.cfg = parse_config("{}");
        CommandOptions opt;
        opt.out_dir = q.dir;
        opt.refine = true;
        opt.quiet = true;
        std::ostringstream log;
        for (const char* cmd : {"solve", "verify", "fb"}) run_command(cmd, q.cfg, opt, log);
        q.solve = load(q.dir / "solve/summary.json");
        q.verify = load(q.dir / "verify/diagnostics.json");
        q.fb = load(q.dir / "fb/summary.json");
        for (std::size_t j = 0; fs::exists(q.dir / ("fb/expansion_" + std::to_string(j) + ".json")); ++j)
            q.expansions.push_back(load(q.dir / ("fb/expansion_" + std::to_string(j) + ".json")));
        return q;
    }();
    return p;
}

Outcome operator_symbol() {
    Clock clock;
    GridSpec g;
    g.R_dom = std::numbers::pi;
    g.n_points = 1024;
    g.periodic = true;
    OperatorOptions o;
    o.far_field = FarField::periodic;
    const auto kernel = fractional_kernel(0.25, 1);
    const auto op = build_discrete_operator(kernel, g, o);
    double worst = 0.0;
    for (double k : {1.0, 2.0, 4.0, 8.0})
        worst = std::max(worst, std::abs(symbol_check(op, k) / testing::symbol_brute(kernel.calibration, 0.25, k) - 1.0));
    const double secs = clock.seconds();
    return {worst <= 1e-2 && secs < 10.0, "max rel error " + num(worst) + " (<= 0.01), " + num(secs, 2) + " s"};
}

Outcome heat_kernel() {
    Clock clock;
    CommandOptions opt;
    opt.out_dir = fs::temp_directory_path() / "nlobs_acceptance" / "kernel";
    opt.quiet = true;
    std::ostringstream log;
    auto cfg = parse_config(R"({"kernel": {"s": 0.5}})");
    const auto r = run_command("kernel-check", cfg, opt, log);
    const double secs = clock.seconds();
    const auto v = load(opt.out_dir / "kernel-check/verdicts.json");
    const auto& gold = claim(v, "kernel.cauchy_golden");
    const auto& mass = claim(v, "kernel.mass");
    const auto& env = claim(v, "kernel.envelope");
    const bool ok = r.status == 0 && passed(gold) && passed(mass) && passed(env) && secs < 10.0;
    return {ok, "sup error " + num(constant(gold, "sup_error")) + " (<= 1e-4), mass error " +
                    num(constant(mass, "max_error")) + " (<= 1e-3), c2/c1 in [" + num(constant(env, "ratio_min")) +
                    ", " + num(constant(env, "ratio_max")) + "] (20%), " + num(secs, 2) + " s"};
}

Outcome epsilon_convergence() {
    Clock clock;
    CommandOptions opt;
    opt.out_dir = fs::temp_directory_path() / "nlobs_acceptance" / "epsilon";
    opt.quiet = true;
    std::ostringstream log;
    const auto cfg = parse_config(R"({"kernel": {"s": 0.25},
        "obstacle": {"family": "cubic_bump", "params": {"A": 1.0, "r": 1.0, "center": 0.0}},
        "solver": {"epsilon_list": [0.04, 0.01, 0.0025]}})");
    const auto r = run_command("epsilon-study", cfg, opt, log);
    const double secs = clock.seconds();
    const auto summary = load(opt.out_dir / "epsilon-study/summary.json");
    const auto& c = claim(summary, "epsilon.convergence");
    const bool ok = r.status == 0 && passed(c) && secs < 300.0;
    return {ok, "order " + num(constant(c, "order")) + " +- " + num(constant(c, "order_half_width")) +
                    " in [0.5, 1.5], monotone " + std::string(constant(c, "monotone_reference") ? "yes" : "no") +
                    ", " + num(secs, 3) + " s"};
}

Outcome complementarity() {
    const auto& p = pipeline();
    bool ok = true;
    double worst = 0.0;
    for (const char* id : {"solve.projected", "solve.projected_fine"}) {
        const auto& f = claim(p.solve, std::string(id) + ".feasible");
        const auto& c = claim(p.solve, std::string(id) + ".complementarity");
        ok = ok && passed(f) && passed(c);
        worst = std::max(worst, constant(c, "max_residual"));
    }
    GridSpec g;
    const auto op = build_discrete_operator(fractional_kernel(0.25, 1), g);
    const auto phi = make_obstacle(ObstacleFamily::cubic_bump, {{1.0, 1.0, 0.0}}, g);
    const auto psi = make_obstacle(ObstacleFamily::cubic_bump, {{1.2, 1.2, 0.0}}, g);
    const auto cmp = comparison_test(op, g, phi, psi);
    ok = ok && cmp.pass && cmp.max_violation <= 1e-8 * cmp.scale;
    return {ok, "u >= phi, max residual " + num(worst) + " (<= 1e-8 scale), comparison violation " +
                    num(cmp.max_violation) + " (<= 1e-8 scale)"};
}

Outcome verify_claim(const std::string& id, const std::vector<std::string>& shown) {
    const auto& c = claim(pipeline().verify, id);
    std::string detail;
    for (const auto& name : shown) detail += (detail.empty() ? "" : ", ") + name + " " + num(constant(c, name));
    if (!c.at("note").get<std::string>().empty()) detail += "; " + c.at("note").get<std::string>();
    return {passed(c), detail};
}

Outcome ut_identity() { return verify_claim("ut_identity", {"C", "C_fine", "C_ratio", "residual_reduction"}); }

Outcome free_boundary_graph() {
    const auto& fb = pipeline().fb;
    const auto& g = claim(fb, "fb.graph");
    const auto& l = claim(fb, "fb.lipschitz");
    return {passed(g) && passed(l), "violations " + num(constant(g, "violations")) + ", Lip " +
                                        num(constant(l, "lipschitz")) + " -> " + num(constant(l, "lipschitz_fine")) +
                                        " ratio " + num(constant(l, "ratio")) + " (within 25%)"};
}

Outcome rates() { return verify_claim("hopf_antihopf", {"points", "passed", "p_lower", "p_upper", "q_lower", "q_upper"}); }

// Field 3 (t - 0.5 - 0.5 x)_+^2 with phi = 0.
Outcome synthetic_expansion(double& c0, double& a) {
    GridSpec g;
    Trajectory tr;
    tr.grid = g;
    tr.phi.assign(g.n_points, 0.0);
    for (std::size_t k = 0; k <= g.steps(); ++k) {
        tr.t.push_back(g.time(k));
        std::vector<double> u(g.n_points);
        for (std::size_t i = 0; i < g.n_points; ++i) {
            const double r = std::max(0.0, g.time(k) - 0.5 - 0.5 * g.x(i));
            u[i] = 3.0 * r * r;
        }
        tr.u.push_back(std::move(u));
    }
    const auto curve = extract_gamma(tr, 1e-14);
    const std::size_t p = curve.sample_of(g.index_of(0.0));
    const auto f = expansion_fit(tr, curve, p, expansion_window(curve, p, g.dt));
    c0 = f.c0;
    a = f.a;
    return {std::abs(c0 / 3.0 - 1.0) <= 1e-3 && std::abs(a / 0.5 - 1.0) <= 1e-3, ""};
}

Outcome expansion() {
    const auto& p = pipeline();
    const auto& e = claim(p.fb, "fb.expansion");
    double lo = INFINITY, hi = -INFINITY, hw = 0.0, c0min = INFINITY;
    for (const auto& j : p.expansions) {
        if (!j.contains("residual_exponent") || j["residual_exponent"].is_null()) continue;
        const double q = j["residual_exponent"].get<double>();
        lo = std::min(lo, q);
        hi = std::max(hi, q);
        hw = std::max(hw, j["residual_exponent_half_width"].get<double>());
        c0min = std::min(c0min, j["c0"].get<double>());
    }
    double c0 = 0.0, a = 0.0;
    const bool synth = synthetic_expansion(c0, a).pass;
    return {passed(e) && synth, num(constant(e, "passed")) + "/" + num(constant(e, "fitted")) +
                                    " fits pass, exponent in [" + num(lo) + ", " + num(hi) + "] half-width <= " +
                                    num(hw, 2) + ", min c0 " + num(c0min) + "; synthetic c0 " + num(c0, 6) +
                                    " a " + num(a, 6) + " (3 digits of 3, 0.5)"};
}

Outcome c11() {
    return verify_claim("c11", {"ratio_xx", "ratio_xt", "ratio_tt", "ratio_third"});
}

Outcome semiconvexity() { return verify_claim("semiconvexity", {"C_hat", "C_hat_fine", "C_hat_ratio"}); }

Outcome classification() {
    const auto& fb = pipeline().fb;
    const auto& c = claim(fb, "fb.classification");
    const auto& s = claim(fb, "fb.singular_slices");
    return {passed(c) && passed(s), "regular " + num(constant(c, "regular")) + ", singular " +
                                        num(constant(c, "singular")) + ", apex singular " +
                                        std::string(constant(c, "apex_singular") ? "yes" : "no") + ", open " +
                                        std::string(constant(c, "regular_open") ? "yes" : "no") +
                                        ", slice median " + num(constant(s, "median")) + " -> " +
                                        num(constant(s, "median_fine"))};
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
    return files;
}

Outcome determinism() {
    const auto cfg = parse_config(R"({"grid": {"n_points": 257, "dt": 0.015625, "T": 0.5},
        "solver": {"mode": "both"}, "analysis": {"t1": 0.1, "t2": 0.4}})");
    std::map<std::string, std::string> runs[2];
    for (int r = 0; r < 2; ++r) {
        CommandOptions opt;
        opt.out_dir = fs::temp_directory_path() / "nlobs_acceptance" / ("det" + std::to_string(r));
        fs::remove_all(opt.out_dir);
        opt.refine = true;
        opt.quiet = true;
        std::ostringstream log;
        for (const char* cmd : {"solve", "verify", "fb", "report"}) run_command(cmd, cfg, opt, log);
        runs[r] = tree(opt.out_dir);
    }
    std::size_t differing = 0;
    for (const auto& [name, content] : runs[0])
        if (!runs[1].count(name) || runs[1].at(name) != content) ++differing;
    return {runs[0].size() == runs[1].size() && differing == 0,
            num(static_cast<double>(runs[0].size())) + " artifacts, " + num(static_cast<double>(differing)) +
                " differ"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"operator symbol", operator_symbol},
        {"heat kernel golden test", heat_kernel},
        {"cross-solver convergence", epsilon_convergence},
        {"complementarity and comparison", complementarity},
        {"u_t identity", ut_identity},
        {"free-boundary graph", free_boundary_graph},
        {"free-boundary rates", rates},
        {"expansion", expansion},
        {"optimal regularity", c11},
        {"semiconvexity", semiconvexity},
        {"classification", classification},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t j = 0; j < criteria.size(); ++j) {
        Outcome o;
        try {
            o = criteria[j].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS " : "FAIL ") << j + 1 << " " << criteria[j].first << ": " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria pass" << std::endl;
    return failures == 0 ? 0 : 1;
}
