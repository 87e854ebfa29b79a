#pragma once

#include <string>
#include <vector>

namespace dbal::cli {

/// Runs the command line `args` (program name excluded) and returns the exit
/// status: 0 success, 1 a failed check (repro, replay, convergence), 2 bad
/// input or usage.
int run(const std::vector<std::string>& args);

}  // namespace dbal::cli
