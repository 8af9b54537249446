#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nlobs/cli/artifacts.hpp"
#include "nlobs/cli/commands.hpp"
#include "nlobs/cli/config.hpp"
#include "nlobs/error.hpp"

using namespace nlobs;
using namespace nlobs::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nlobs_cli_" + name);
    fs::remove_all(p);
    return p;
}

ErrorKind kind_of(const std::function<void()>& f, std::string* message = nullptr) {
    try {
        f();
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::parameter;
}

const char* small_config = R"({
  "kernel": {"s": 0.25},
  "grid": {"n_points": 129, "dt": 0.03125, "T": 0.5},
  "obstacle": {"family": "cubic_bump", "params": {"A": 1.0, "r": 1.0, "center": 0.0}},
  "analysis": {"t1": 0.1, "t2": 0.4},
  "output": {"snapshots": 8}
})";

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
    return files;
}

}  // namespace

TEST(Config, MinimalConfigEchoesEveryDefault) {
    const auto c = parse_config(R"({"kernel": {"s": 0.25},
        "obstacle": {"family": "cubic_bump", "params": {"A": 1, "r": 1, "center": 0}}})");
    const auto echo = nlohmann::json::parse(echo_config(c));
    EXPECT_EQ(echo["grid"]["n_points"], 1025);
    EXPECT_DOUBLE_EQ(echo["grid"]["R_dom"].get<double>(), 8.0);
    EXPECT_DOUBLE_EQ(echo["grid"]["dt"].get<double>(), 1.0 / 256.0);
    EXPECT_EQ(echo["solver"]["mode"], "projected");
    EXPECT_EQ(echo["solver"]["epsilon_list"].size(), 3u);
    EXPECT_DOUBLE_EQ(echo["analysis"]["t1"].get<double>(), 0.2);
    EXPECT_DOUBLE_EQ(echo["analysis"]["t2"].get<double>(), 0.8);
    EXPECT_EQ(echo["analysis"]["refinement"], false);
    EXPECT_EQ(echo["output"]["directory"], "out");
    EXPECT_TRUE(echo["kernel"].contains("lambda"));
    EXPECT_EQ(echo["obstacle"]["family"], "cubic_bump");
}

TEST(Config, SupercriticalRestriction) {
    std::string msg;
    EXPECT_EQ(kind_of([] { parse_config(R"({"kernel": {"s": 0.7}})"); }, &msg), ErrorKind::config);
    EXPECT_NE(msg.find("kernel.s"), std::string::npos);
    EXPECT_NE(msg.find("supercritical"), std::string::npos);
}

TEST(Config, EpsilonListOrdering) {
    std::string msg;
    EXPECT_EQ(kind_of([] { parse_config(R"({"solver": {"epsilon_list": [0.1, 0.2, 0.05]}})"); }, &msg),
              ErrorKind::config);
    EXPECT_NE(msg.find("solver.epsilon_list"), std::string::npos);
    EXPECT_NE(msg.find("decreasing"), std::string::npos);
}

TEST(Config, ParseErrorCarriesLine) {
    std::string msg;
    EXPECT_EQ(kind_of([] { parse_config("{\n  \"kernel\": {\"s\": 0.25,}\n}", "bad.json"); }, &msg),
              ErrorKind::config);
    EXPECT_NE(msg.find("bad.json:2:"), std::string::npos) << msg;
}

TEST(Config, UnknownFieldNamed) {
    std::string msg;
    EXPECT_EQ(kind_of([] { parse_config(R"({"grid": {"npoints": 10}})"); }, &msg), ErrorKind::config);
    EXPECT_NE(msg.find("grid.npoints"), std::string::npos);
}

TEST(Config, TimeWindowOrdering) {
    EXPECT_EQ(kind_of([] { parse_config(R"({"analysis": {"t1": 0.5, "t2": 0.4}})"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([] { parse_config(R"({"analysis": {"t2": 1.5}})"); }), ErrorKind::config);
}

TEST(Config, HashIgnoresOutputDirectoryOnly) {
    auto a = parse_config(small_config);
    auto b = a;
    b.output.directory = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.grid.dt = 1.0 / 64.0;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Artifacts, NumberFormatRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125}) {
        const std::string s = format_number(v);
        EXPECT_EQ(std::stod(s), v) << s;
    }
    EXPECT_EQ(format_fixed(0.25, 6), "0.250000");
}

TEST(Artifacts, AtomicWriteLeavesNoTemporary) {
    const fs::path dir = scratch("atomic");
    atomic_write(dir / "a" / "b.txt", "first");
    atomic_write(dir / "a" / "b.txt", "second");
    EXPECT_EQ(read_file(dir / "a" / "b.txt"), "second");
    EXPECT_FALSE(fs::exists(dir / "a" / "b.txt.tmp"));
    fs::remove_all(dir);
}

TEST(Artifacts, CsvCarriesHash) {
    const std::string csv = csv_text("0123456789abcdef", {"x", "u"}, {{0.0, 0.5}, {1.0, 2.0}});
    EXPECT_EQ(csv, "# config_hash 0123456789abcdef\nx,u\n0,1\n0.5,2\n");
}

TEST(Artifacts, TrajectoryRoundTrip) {
    Trajectory tr;
    tr.grid.n_points = 3;
    tr.grid.R_dom = 1.0;
    tr.phi = {0.0, 1.0, 0.0};
    tr.t = {0.0, 0.1};
    tr.u = {{0.0, 1.0, 0.0}, {1.0 / 3.0, 0.9, 2e-17}};
    const fs::path p = scratch("traj.csv");
    atomic_write(p, trajectory_csv("feedfacecafebeef", tr));
    Trajectory back;
    back.grid = tr.grid;
    back.phi = tr.phi;
    EXPECT_EQ(read_trajectory_csv(p, back), "feedfacecafebeef");
    EXPECT_EQ(back.t, tr.t);
    EXPECT_EQ(back.u, tr.u);
    fs::remove(p);
}

TEST(Commands, VerifyWithoutSolveIsMissingArtifact) {
    CommandOptions opt;
    opt.out_dir = scratch("empty");
    opt.quiet = true;
    std::ostringstream log;
    const auto cfg = parse_config(small_config);
    EXPECT_EQ(kind_of([&] { run_command("verify", cfg, opt, log); }), ErrorKind::missing_artifact);
    EXPECT_EQ(kind_of([&] { run_command("fb", cfg, opt, log); }), ErrorKind::missing_artifact);
    EXPECT_EQ(kind_of([&] { run_command("report", cfg, opt, log); }), ErrorKind::missing_artifact);
    EXPECT_EQ(kind_of([&] { run_command("plot", cfg, opt, log); }), ErrorKind::parameter);
}

TEST(Commands, StaleTrajectoryRejected) {
    CommandOptions opt;
    opt.out_dir = scratch("stale");
    opt.quiet = true;
    std::ostringstream log;
    auto cfg = parse_config(small_config);
    run_command("solve", cfg, opt, log);
    cfg.analysis.t1 = 0.15;
    EXPECT_EQ(kind_of([&] { run_command("verify", cfg, opt, log); }), ErrorKind::missing_artifact);
    fs::remove_all(opt.out_dir);
}

TEST(Commands, KernelCheckCauchyGolden) {
    CommandOptions opt;
    opt.out_dir = scratch("kernel");
    opt.quiet = true;
    std::ostringstream log;
    const auto r = run_command("kernel-check", parse_config(R"({"kernel": {"s": 0.5}})"), opt, log);
    EXPECT_EQ(r.status, 0) << r.first_failure;
    ASSERT_FALSE(r.claims.empty());
    EXPECT_EQ(r.claims.front().id, "kernel.cauchy_golden");
    EXPECT_EQ(r.claims.front().verdict, Verdict::pass);
    EXPECT_TRUE(fs::exists(opt.out_dir / "kernel-check" / "verdicts.json"));
    fs::remove_all(opt.out_dir);
}

TEST(Commands, PipelineArtifactsAndHash) {
    CommandOptions opt;
    opt.out_dir = scratch("pipeline");
    opt.quiet = true;
    std::ostringstream log;
    const auto cfg = parse_config(small_config);
    const auto solve = run_command("solve", cfg, opt, log);
    EXPECT_EQ(solve.status, 0) << solve.first_failure;
    run_command("verify", cfg, opt, log);
    run_command("fb", cfg, opt, log);
    run_command("report", cfg, opt, log);
    const auto files = tree(opt.out_dir);
    std::size_t snapshots = 0;
    for (const auto& [name, content] : files) {
        if (name.rfind("solve/snapshots/", 0) == 0) {
            ++snapshots;
            EXPECT_NE(content.find("\nx,u,v,Lu,ut\n"), std::string::npos) << name;
        }
        if (name == "config.json") continue;
        EXPECT_NE(content.find(config_hash(cfg)), std::string::npos) << name;
    }
    EXPECT_EQ(snapshots, 8u);
    EXPECT_TRUE(files.count("solve/snapshots/projected_t0.500000.csv"));
    EXPECT_NE(files.at("fb/curve.csv").find("\nx,gamma,grad_gamma,label\n"), std::string::npos);
    EXPECT_TRUE(files.count("verify/diagnostics.json"));
    EXPECT_TRUE(files.count("report/summary.txt"));
    fs::remove_all(opt.out_dir);
}

TEST(Commands, ByteIdenticalReruns) {
    const auto cfg = parse_config(small_config);
    std::map<std::string, std::string> runs[2];
    for (int r = 0; r < 2; ++r) {
        CommandOptions opt;
        opt.out_dir = scratch("det" + std::to_string(r));
        opt.quiet = true;
        std::ostringstream log;
        for (const char* cmd : {"solve", "verify", "fb", "report"}) run_command(cmd, cfg, opt, log);
        runs[r] = tree(opt.out_dir);
        fs::remove_all(opt.out_dir);
    }
    EXPECT_EQ(runs[0], runs[1]);
}
