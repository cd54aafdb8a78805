#pragma once

#include <string>

#include "ym/runconfig.hpp"

namespace ym {

// Executes train -> analyze -> export into cfg.out_dir. Returns a process
// exit code: 0 ok, 2 numerical failure.
int run_command(RunConfig cfg, bool resume = false);

// Runs the analysis stage alone against a stored checkpoint.
int analyze_command(const std::string& checkpoint, RunConfig cfg);

// Gradient/quadrature self-tests; prints one line per check.
int check_command(int threads);

}  // namespace ym
