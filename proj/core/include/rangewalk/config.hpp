#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rangewalk/resistance.hpp"

namespace rangewalk {

// Resolved configuration of one experiment run. Flags beat config-file values
// beat the per-subcommand defaults applied by apply_defaults().
struct ExperimentConfig {
  std::string subcommand;
  int d = 0;
  std::int64_t horizon = 0;   // base path horizon (per side for two-sided runs)
  std::int64_t n_envs = 0;    // environments
  std::int64_t nmax = 0;      // walk horizon / ball radius / cut-index target
  std::int64_t trials = 0;    // walkers or block anchors per environment
  std::int64_t const_envs = 0;  // scaling-test: environments for the constants phase
  std::uint64_t master_seed = 1;
  int workers = 0;            // 0 = hardware concurrency
  std::string out_dir;
  ConductanceMode mode = ConductanceMode::kUnit;
  std::vector<double> lambda_grid = {2, 4, 8, 16, 32};
  double guard_fraction = 0.1;
};

extern const std::vector<std::string> kSubcommands;

// Fills zero fields with per-subcommand defaults (documented in the README).
void apply_defaults(ExperimentConfig& cfg);

// Throws ConfigError on invalid combinations, including the d-range rules:
// constants and scaling-test require d >= 5, d4-diagnostics requires d = 4,
// the remaining analysis subcommands require d >= 4.
void validate(const ExperimentConfig& cfg);

std::vector<double> parse_lambda_grid(const std::string& csv);

const char* mode_name(ConductanceMode mode);

}  // namespace rangewalk
