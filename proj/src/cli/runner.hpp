#pragma once

// Executes configured jobs and writes their artifacts.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace lspdyn::cli {

struct RunOptions {
  int workers = 1;
  std::optional<std::filesystem::path> out_dir;  ///< overrides output.directory
  bool emit_plots = false;                       ///< ORed with output.emit_plots
};

struct RunReport {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// Runs every job in order. Library errors propagate unchanged; files of
/// finished jobs stay on disk, unfinished ones never appear.
RunReport run_jobs(const std::vector<RunConfig>& jobs, const RunOptions& options, std::ostream& log);

}  // namespace lspdyn::cli
