// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "untrack/cli/run_config.hpp"

namespace untrack::cli {

const std::vector<std::string>& command_names();

/// Runs one subcommand: outputs go to `out` (created if needed) together
/// with the resolved configuration as config.ini; a human-readable summary
/// goes to `os`. Throws ConfigError, MissingFileError or the library's
/// data/shape/divergence errors.
void run_command(const std::string& name, RunConfig cfg, const std::filesystem::path& out, std::ostream& os);

/// Output directory: `flag` if set, else $UNTRACK_OUT/<command>, else
/// ./untrack_out/<command>.
std::filesystem::path output_dir(const std::string& command, const std::string& flag);

}  // namespace untrack::cli
