#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace shearflame::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  // validate / counterexample checks did not all pass
  kExitConfig = 2,
  kExitSolver = 3,
  kExitInconclusive = 4,
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand, writing artifacts under config.out and a one-line
/// summary per artifact to `log`. Library errors propagate as Error.
int run_command(const std::string& name, const RunConfig& config, std::ostream& log);

/// Exit code for an Error kind.
int exit_code_for(const std::exception& e);

/// Machine-readable error body {"error": kind, "message": text}.
std::string error_json(const std::exception& e);

}  // namespace shearflame::cli
