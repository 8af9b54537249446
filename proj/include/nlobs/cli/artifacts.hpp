#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nlobs/obstacle.hpp"

namespace nlobs::cli {

/// 17-significant-digit decimal (round-trips exactly), independent of the locale.
std::string format_number(double v);
/// Fixed-point with `digits` decimals, independent of the locale.
std::string format_fixed(double v, int digits);

/// Writes `content` to a temporary sibling and renames it over `path`.
/// Parent directories are created. Throws Error(io).
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// CSV text: a "# config_hash <hash>" line, the header, then the rows.
std::string csv_text(const std::string& hash, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& columns);

/// Full trajectory, one row per level: t followed by u at every node.
std::string trajectory_csv(const std::string& hash, const Trajectory& traj);

/// Reads a trajectory written by trajectory_csv. `traj` must carry grid,
/// phi and s; levels are appended. Returns the embedded config hash.
/// Throws Error(io) on malformed input.
std::string read_trajectory_csv(const std::filesystem::path& path, Trajectory& traj);

}  // namespace nlobs::cli
