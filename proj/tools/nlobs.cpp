#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nlobs/cli/commands.hpp"
#include "nlobs/cli/config.hpp"
#include "nlobs/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal parabolic obstacle problem: solvers and regularity diagnostics"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    bool refine = false;
    bool quiet = false;
    app.add_option("--config", config_path, "JSON run configuration (defaults when omitted)");
    app.add_option("--out", out_dir, "output directory (overrides output.directory)");
    app.add_flag("--refine", refine, "also run or use the h/2, dt/2 refinement");
    app.add_flag("--quiet", quiet, "suppress progress output");

    for (const auto& name : nlobs::cli::subcommands()) app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const auto cfg = config_path.empty() ? nlobs::cli::parse_config("{}", "<defaults>")
                                             : nlobs::cli::load_config(config_path);
        nlobs::cli::CommandOptions opt;
        opt.out_dir = out_dir;
        opt.refine = refine;
        opt.quiet = quiet;
        const std::string name = app.get_subcommands().front()->get_name();
        const auto result = nlobs::cli::run_command(name, cfg, opt, std::cerr);
        if (result.status != 0) {
            std::cerr << name << ": claim failed: " << result.first_failure << '\n';
            return 1;
        }
        if (!quiet) std::cerr << name << ": ok\n";
        return 0;
    } catch (const nlobs::Error& e) {
        std::cerr << "error [" << nlobs::to_string(e.kind()) << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
