#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nlobs/grid.hpp"
#include "nlobs/nonlocal_operator.hpp"
#include "nlobs/obstacle.hpp"

namespace nlobs::cli {

struct KernelConfig {
    double s = 0.25;
    std::string kind = "fractional";  // fractional | custom
    double lambda = 1.0;
    double Lambda = 1.0;
    std::vector<double> profile_r;
    std::vector<double> profile_rho;
};

struct GridConfig {
    int dim = 1;
    double R_dom = 8.0;
    std::size_t n_points = 1025;
    double T = 1.0;
    double dt = 1.0 / 256.0;
};

struct ObstacleConfig {
    std::string family = "sum_of_bumps";  // cubic_bump | sum_of_bumps
    std::vector<Bump> bumps = {{1.0, 1.0, -0.8025}, {1.0, 1.0, 0.8025}, {0.34, 0.5, 0.0}};
};

struct SolverConfig {
    std::string mode = "projected";  // penalized | projected | both
    double epsilon = 1e-2;
    std::vector<double> epsilon_list = {4e-2, 1e-2, 2.5e-3};
    double omega = 1.5;
    double lcp_tol = 1e-10;
    std::size_t max_sweeps = 10000;
    double newton_tol = 1e-15;
    double linear_tol = 1e-13;
};

struct AnalysisConfig {
    double t1 = 0.2;
    double t2 = 0.8;
    double tol_fb = 1e-9;
    std::vector<double> fit_points;  // empty: chosen automatically
    bool refinement = false;
    double edge_fraction = 0.25;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats = {"csv", "json"};
    std::size_t snapshots = 64;
};

struct RunConfig {
    KernelConfig kernel;
    GridConfig grid;
    ObstacleConfig obstacle;
    SolverConfig solver;
    AnalysisConfig analysis;
    OutputConfig output;

    bool wants(const std::string& format) const;
};

/// Parses JSON text; `origin` names the source in error messages.
/// Throws Error(config) with line and column on syntax errors and with the
/// dotted field name on validation errors.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

void validate(const RunConfig& config);

/// Complete configuration with every default filled in (stable key order).
std::string echo_config(const RunConfig& config);

/// FNV-1a 64-bit of the echoed configuration without output.directory,
/// as 16 hex digits.
std::string config_hash(const RunConfig& config);
std::uint64_t fnv1a(const std::string& bytes);

GridSpec make_grid(const RunConfig& config);
KernelSpec make_kernel(const RunConfig& config);
ObstacleSpec make_obstacle(const RunConfig& config, const GridSpec& grid);

}  // namespace nlobs::cli
