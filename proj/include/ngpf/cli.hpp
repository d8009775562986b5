#pragma once

#include "ngpf/io.hpp"

namespace ngpf {

/// Command-line entry point. Exit codes: 0 success, 1 usage/config error,
/// 2 data error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

/// Runs n_chains independent samplers with seeds cfg.seed, cfg.seed+1, ...
/// in parallel (thread count capped by the NGPF_THREADS environment
/// variable). Results come back in chain order regardless of scheduling.
std::vector<Chain> run_chains(const FitConfig& cfg, const Dataset& data,
                              Index n_chains, const GibbsOptions& options = {});

}  // namespace ngpf
