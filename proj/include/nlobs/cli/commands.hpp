#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "nlobs/cli/config.hpp"
#include "nlobs/diagnostics.hpp"

namespace nlobs::cli {

struct CommandOptions {
    std::filesystem::path out_dir;  // empty: config.output.directory
    bool refine = false;            // also run / use the h/2, dt/2 refinement
    bool quiet = false;
};

struct ClaimVerdict {
    std::string id;
    Verdict verdict = Verdict::undetermined;
    std::string note;
};

struct CommandResult {
    int status = 0;  // 0 iff no verdict failed
    std::string first_failure;
    std::vector<ClaimVerdict> claims;
    std::vector<std::filesystem::path> artifacts;
};

/// solve, verify, fb, kernel-check, epsilon-study, report
const std::vector<std::string>& subcommands();

/// Runs one pipeline stage. Throws Error(missing_artifact) when an earlier
/// stage's output is absent or was produced under a different config hash,
/// Error(parameter) for an unknown subcommand.
CommandResult run_command(const std::string& name, const RunConfig& config,
                          const CommandOptions& options, std::ostream& log);

}  // namespace nlobs::cli
