#pragma once

#include <string>

#include "pcglab/config.hpp"

namespace pcglab {

// Exit codes reported by dispatch().
enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,  // bad keys, bad values, invariant violations
    kRuntimeError = 3, // missing files, incompatible artifacts
    kInternalError = 4,
};

struct RunConfig {
    std::string command;
    ParsedConfig config;
};

// Routes a validated command to its module. Writes a resolved copy of the
// configuration into the run's output directory before doing any work.
int dispatch(const RunConfig& run);

} // namespace pcglab
