#pragma once

#include "run_config.hpp"

namespace modred::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kIo = 2,
    kInfeasible = 3,
    kUnattainable = 4,
    kValidationFailed = 5,
};

// Each command reads and writes files under cfg.out and returns an ExitCode.
int run_demo_beams(const RunConfig& cfg);
int run_synth(const RunConfig& cfg);
int run_reduce(const RunConfig& cfg);
int run_validate(const RunConfig& cfg);
int run_bode(const RunConfig& cfg);

}  // namespace modred::cli
