#include "nlobs/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nlobs/error.hpp"

namespace nlobs::cli {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
    throw Error(ErrorKind::config, field + ": " + why);
}

void reject_unknown(const json& obj, const std::string& prefix, std::set<std::string> allowed) {
    if (!obj.is_object()) invalid(prefix, "expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) invalid(prefix.empty() ? key : prefix + "." + key, "unknown field");
}

template <typename T>
void read(const json& obj, const std::string& prefix, const char* key, T& out) {
    if (!obj.contains(key)) return;
    const std::string field = prefix + "." + key;
    try {
        const auto& v = obj.at(key);
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) invalid(field, "expected a number");
        } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, int>) {
            if (!v.is_number_integer()) invalid(field, "expected an integer");
            if constexpr (std::is_same_v<T, std::size_t>)
                if (v.get<long long>() < 0) invalid(field, "must be nonnegative");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) invalid(field, "expected true or false");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) invalid(field, "expected a string");
        }
        out = v.get<T>();
    } catch (const json::exception& e) {
        invalid(field, e.what());
    }
}

void read_list(const json& obj, const std::string& prefix, const char* key, std::vector<double>& out) {
    if (!obj.contains(key)) return;
    const std::string field = prefix + "." + key;
    const auto& v = obj.at(key);
    if (!v.is_array()) invalid(field, "expected an array of numbers");
    out.clear();
    for (const auto& e : v) {
        if (!e.is_number()) invalid(field, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
}

void read_strings(const json& obj, const std::string& prefix, const char* key,
                  std::vector<std::string>& out) {
    if (!obj.contains(key)) return;
    const std::string field = prefix + "." + key;
    const auto& v = obj.at(key);
    if (!v.is_array()) invalid(field, "expected an array of strings");
    out.clear();
    for (const auto& e : v) {
        if (!e.is_string()) invalid(field, "expected an array of strings");
        out.push_back(e.get<std::string>());
    }
}

Bump read_bump(const json& b, const std::string& field) {
    reject_unknown(b, field, {"A", "r", "center"});
    Bump bump;
    read(b, field, "A", bump.A);
    read(b, field, "r", bump.r);
    read(b, field, "center", bump.center);
    return bump;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

ojson bump_json(const Bump& b) { return ojson{{"A", b.A}, {"r", b.r}, {"center", b.center}}; }

ojson echo_json(const RunConfig& c, bool with_directory) {
    ojson j;
    ojson kernel = {{"s", c.kernel.s}, {"kind", c.kernel.kind}, {"lambda", c.kernel.lambda},
                    {"Lambda", c.kernel.Lambda}};
    if (c.kernel.kind == "custom") {
        kernel["profile_r"] = c.kernel.profile_r;
        kernel["profile_rho"] = c.kernel.profile_rho;
    }
    j["kernel"] = kernel;
    j["grid"] = {{"dim", c.grid.dim},
                 {"R_dom", c.grid.R_dom},
                 {"n_points", c.grid.n_points},
                 {"T", c.grid.T},
                 {"dt", c.grid.dt}};
    ojson params;
    if (c.obstacle.family == "cubic_bump" && c.obstacle.bumps.size() == 1) {
        params = bump_json(c.obstacle.bumps.front());
    } else {
        ojson bumps = ojson::array();
        for (const auto& b : c.obstacle.bumps) bumps.push_back(bump_json(b));
        params["bumps"] = bumps;
    }
    j["obstacle"] = {{"family", c.obstacle.family}, {"params", params}};
    j["solver"] = {{"mode", c.solver.mode},
                   {"epsilon", c.solver.epsilon},
                   {"epsilon_list", c.solver.epsilon_list},
                   {"omega", c.solver.omega},
                   {"lcp_tol", c.solver.lcp_tol},
                   {"max_sweeps", c.solver.max_sweeps},
                   {"newton_tol", c.solver.newton_tol},
                   {"linear_tol", c.solver.linear_tol}};
    j["analysis"] = {{"t1", c.analysis.t1},
                     {"t2", c.analysis.t2},
                     {"tol_fb", c.analysis.tol_fb},
                     {"fit_points", c.analysis.fit_points},
                     {"refinement", c.analysis.refinement},
                     {"edge_fraction", c.analysis.edge_fraction}};
    ojson output;
    if (with_directory) output["directory"] = c.output.directory;
    output["formats"] = c.output.formats;
    output["snapshots"] = c.output.snapshots;
    j["output"] = output;
    return j;
}

}  // namespace

bool RunConfig::wants(const std::string& format) const {
    return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw Error(ErrorKind::config, origin + ":" + std::to_string(line) + ":" +
                                           std::to_string(col) + ": parse error: " + e.what());
    }
    RunConfig c;
    reject_unknown(j, "", {"kernel", "grid", "obstacle", "solver", "analysis", "output"});

    if (j.contains("kernel")) {
        const auto& k = j["kernel"];
        reject_unknown(k, "kernel", {"s", "kind", "lambda", "Lambda", "profile_r", "profile_rho"});
        read(k, "kernel", "s", c.kernel.s);
        read(k, "kernel", "kind", c.kernel.kind);
        read(k, "kernel", "lambda", c.kernel.lambda);
        read(k, "kernel", "Lambda", c.kernel.Lambda);
        read_list(k, "kernel", "profile_r", c.kernel.profile_r);
        read_list(k, "kernel", "profile_rho", c.kernel.profile_rho);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        reject_unknown(g, "grid", {"dim", "R_dom", "n_points", "T", "dt"});
        read(g, "grid", "dim", c.grid.dim);
        read(g, "grid", "R_dom", c.grid.R_dom);
        read(g, "grid", "n_points", c.grid.n_points);
        read(g, "grid", "T", c.grid.T);
        read(g, "grid", "dt", c.grid.dt);
    }
    if (j.contains("obstacle")) {
        const auto& o = j["obstacle"];
        reject_unknown(o, "obstacle", {"family", "params"});
        read(o, "obstacle", "family", c.obstacle.family);
        if (c.obstacle.family != "cubic_bump" && c.obstacle.family != "sum_of_bumps")
            invalid("obstacle.family", "expected cubic_bump or sum_of_bumps");
        if (o.contains("params")) {
            const auto& p = o["params"];
            if (c.obstacle.family == "cubic_bump") {
                c.obstacle.bumps = {read_bump(p, "obstacle.params")};
            } else {
                reject_unknown(p, "obstacle.params", {"bumps"});
                if (!p.contains("bumps") || !p["bumps"].is_array())
                    invalid("obstacle.params.bumps", "expected an array of bumps");
                c.obstacle.bumps.clear();
                std::size_t idx = 0;
                for (const auto& b : p["bumps"])
                    c.obstacle.bumps.push_back(
                        read_bump(b, "obstacle.params.bumps[" + std::to_string(idx++) + "]"));
            }
        } else if (c.obstacle.family == "cubic_bump") {
            c.obstacle.bumps = {Bump{}};
        }
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        reject_unknown(s, "solver", {"mode", "epsilon", "epsilon_list", "omega", "lcp_tol",
                                     "max_sweeps", "newton_tol", "linear_tol"});
        read(s, "solver", "mode", c.solver.mode);
        read(s, "solver", "epsilon", c.solver.epsilon);
        read_list(s, "solver", "epsilon_list", c.solver.epsilon_list);
        read(s, "solver", "omega", c.solver.omega);
        read(s, "solver", "lcp_tol", c.solver.lcp_tol);
        read(s, "solver", "max_sweeps", c.solver.max_sweeps);
        read(s, "solver", "newton_tol", c.solver.newton_tol);
        read(s, "solver", "linear_tol", c.solver.linear_tol);
    }
    if (j.contains("analysis")) {
        const auto& a = j["analysis"];
        reject_unknown(a, "analysis",
                       {"t1", "t2", "tol_fb", "fit_points", "refinement", "edge_fraction"});
        read(a, "analysis", "t1", c.analysis.t1);
        read(a, "analysis", "t2", c.analysis.t2);
        read(a, "analysis", "tol_fb", c.analysis.tol_fb);
        read_list(a, "analysis", "fit_points", c.analysis.fit_points);
        read(a, "analysis", "refinement", c.analysis.refinement);
        read(a, "analysis", "edge_fraction", c.analysis.edge_fraction);
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        reject_unknown(o, "output", {"directory", "formats", "snapshots"});
        read(o, "output", "directory", c.output.directory);
        read_strings(o, "output", "formats", c.output.formats);
        read(o, "output", "snapshots", c.output.snapshots);
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::config, path + ": cannot open configuration file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

void validate(const RunConfig& c) {
    const auto& k = c.kernel;
    if (!(k.s > 0.0 && k.s <= 0.5))
        invalid("kernel.s", "must lie in (0, 1/2]; only the supercritical regime s <= 1/2 is supported");
    if (k.kind == "fractional") {
        if (k.lambda != 1.0 || k.Lambda != 1.0)
            invalid("kernel.lambda", "the calibrated fractional kernel has lambda = Lambda = 1");
        if (!k.profile_r.empty() || !k.profile_rho.empty())
            invalid("kernel.profile_r", "profiles apply to custom kernels only");
    } else if (k.kind == "custom") {
        if (k.profile_r.empty() || k.profile_r.size() != k.profile_rho.size())
            invalid("kernel.profile_r", "custom kernels need matching profile_r and profile_rho");
        if (!(k.lambda > 0.0 && k.lambda <= k.Lambda))
            invalid("kernel.lambda", "need 0 < lambda <= Lambda");
        for (double rho : k.profile_rho)
            if (!(rho >= k.lambda && rho <= k.Lambda))
                invalid("kernel.profile_rho", "profile must lie in [lambda, Lambda]");
        for (std::size_t j = 0; j < k.profile_r.size(); ++j)
            if (!(k.profile_r[j] > 0.0) || (j > 0 && !(k.profile_r[j] > k.profile_r[j - 1])))
                invalid("kernel.profile_r", "radii must be positive and increasing");
    } else {
        invalid("kernel.kind", "expected fractional or custom");
    }

    const auto& g = c.grid;
    if (g.dim != 1) invalid("grid.dim", "solvers are implemented in dimension 1 only");
    if (!(g.R_dom > 0.0)) invalid("grid.R_dom", "must be positive");
    if (g.n_points < 5) invalid("grid.n_points", "need at least 5 nodes");
    if (!(g.T > 0.0)) invalid("grid.T", "must be positive");
    if (!(g.dt > 0.0 && g.dt <= g.T)) invalid("grid.dt", "must lie in (0, T]");
    const double steps = g.T / g.dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
        invalid("grid.dt", "T must be an integer multiple of dt");

    if (c.obstacle.bumps.empty()) invalid("obstacle.params", "need at least one bump");
    if (c.obstacle.family == "cubic_bump" && c.obstacle.bumps.size() != 1)
        invalid("obstacle.params", "cubic_bump takes a single bump");
    for (std::size_t j = 0; j < c.obstacle.bumps.size(); ++j) {
        const auto& b = c.obstacle.bumps[j];
        const std::string f = "obstacle.params.bumps[" + std::to_string(j) + "]";
        if (!(b.A > 0.0)) invalid(f + ".A", "must be positive");
        if (!(b.r > 0.0)) invalid(f + ".r", "must be positive");
        if (!(std::abs(b.center) + b.r < g.R_dom)) invalid(f, "support must lie inside (-R_dom, R_dom)");
    }

    const auto& s = c.solver;
    if (s.mode != "penalized" && s.mode != "projected" && s.mode != "both")
        invalid("solver.mode", "expected penalized, projected or both");
    if (!(s.epsilon > 0.0)) invalid("solver.epsilon", "must be positive");
    for (std::size_t j = 0; j < s.epsilon_list.size(); ++j) {
        if (!(s.epsilon_list[j] > 0.0)) invalid("solver.epsilon_list", "entries must be positive");
        if (j > 0 && !(s.epsilon_list[j] < s.epsilon_list[j - 1]))
            invalid("solver.epsilon_list", "must be strictly decreasing");
    }
    if (!(s.omega > 0.0 && s.omega < 2.0)) invalid("solver.omega", "must lie in (0, 2)");
    if (!(s.lcp_tol > 0.0)) invalid("solver.lcp_tol", "must be positive");
    if (s.max_sweeps == 0) invalid("solver.max_sweeps", "must be positive");
    if (!(s.newton_tol > 0.0)) invalid("solver.newton_tol", "must be positive");
    if (!(s.linear_tol > 0.0)) invalid("solver.linear_tol", "must be positive");

    const auto& a = c.analysis;
    if (!(a.t1 > 0.0 && a.t1 < a.t2 && a.t2 < g.T)) invalid("analysis.t1", "need 0 < t1 < t2 < T");
    if (!(a.tol_fb > 0.0)) invalid("analysis.tol_fb", "must be positive");
    if (!(a.edge_fraction >= 0.0 && a.edge_fraction < 1.0))
        invalid("analysis.edge_fraction", "must lie in [0, 1)");
    for (double x : a.fit_points)
        if (!(std::abs(x) < g.R_dom)) invalid("analysis.fit_points", "points must lie inside the domain");

    const auto& o = c.output;
    if (o.directory.empty()) invalid("output.directory", "must not be empty");
    if (o.formats.empty()) invalid("output.formats", "need at least one format");
    for (const auto& f : o.formats)
        if (f != "csv" && f != "json") invalid("output.formats", "unknown format '" + f + "'");
    if (o.snapshots < 2) invalid("output.snapshots", "need at least 2 snapshot times");
}

std::string echo_config(const RunConfig& config) { return echo_json(config, true).dump(2) + "\n"; }

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash(const RunConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(echo_json(config, false).dump())));
    return buf;
}

GridSpec make_grid(const RunConfig& config) {
    GridSpec g;
    g.dim = config.grid.dim;
    g.R_dom = config.grid.R_dom;
    g.n_points = config.grid.n_points;
    g.T = config.grid.T;
    g.dt = config.grid.dt;
    g.validate();
    return g;
}

KernelSpec make_kernel(const RunConfig& config) {
    if (config.kernel.kind == "custom")
        return custom_kernel(config.kernel.s, config.kernel.profile_r, config.kernel.profile_rho);
    return fractional_kernel(config.kernel.s, config.grid.dim);
}

ObstacleSpec make_obstacle(const RunConfig& config, const GridSpec& grid) {
    const auto family = config.obstacle.family == "cubic_bump" ? ObstacleFamily::cubic_bump
                                                               : ObstacleFamily::sum_of_bumps;
    return nlobs::make_obstacle(family, config.obstacle.bumps, grid);
}

}  // namespace nlobs::cli
