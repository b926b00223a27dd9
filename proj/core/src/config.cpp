#include "rangewalk/config.hpp"

#include <algorithm>
#include <sstream>

#include "rangewalk/errors.hpp"

namespace rangewalk {

const std::vector<std::string> kSubcommands = {
    "constants", "heatkernel", "displacement", "exit-times",
    "volume",    "scaling-test", "cuttimes",   "d4-diagnostics"};

void apply_defaults(ExperimentConfig& cfg) {
  const auto def = [](std::int64_t& field, std::int64_t value) {
    if (field == 0) field = value;
  };
  if (cfg.subcommand == "constants") {
    def(cfg.n_envs, 1000);
    def(cfg.horizon, 20000);
    def(cfg.trials, 64);
    def(cfg.nmax, 1);
  } else if (cfg.subcommand == "heatkernel") {
    def(cfg.n_envs, 100);
    def(cfg.nmax, 4096);
    def(cfg.horizon, 60 * cfg.nmax);
    def(cfg.trials, 1);
  } else if (cfg.subcommand == "displacement") {
    def(cfg.n_envs, 200);
    def(cfg.nmax, 4096);
    def(cfg.trials, 4);
    def(cfg.horizon, 20 * static_cast<std::int64_t>(std::max(64.0, 8 * std::sqrt(double(cfg.nmax)))));
  } else if (cfg.subcommand == "exit-times" || cfg.subcommand == "volume") {
    def(cfg.n_envs, 200);
    def(cfg.nmax, 1024);
    def(cfg.horizon, 30 * cfg.nmax);
    def(cfg.trials, 1);
  } else if (cfg.subcommand == "scaling-test") {
    def(cfg.n_envs, 2000);
    def(cfg.nmax, 10000);
    def(cfg.const_envs, 400);
    def(cfg.horizon, 12000);
    def(cfg.trials, 1);
  } else if (cfg.subcommand == "cuttimes") {
    def(cfg.n_envs, 8);
    def(cfg.nmax, 1 << 17);
    def(cfg.horizon, 8 * cfg.nmax);
    def(cfg.trials, 1);
  } else if (cfg.subcommand == "d4-diagnostics") {
    def(cfg.n_envs, 200);
    def(cfg.nmax, 1000);
    def(cfg.horizon, 40 * cfg.nmax);
    def(cfg.trials, 1);
  }
}

void validate(const ExperimentConfig& cfg) {
  if (std::find(kSubcommands.begin(), kSubcommands.end(), cfg.subcommand) ==
      kSubcommands.end()) {
    throw ConfigError("unknown subcommand '" + cfg.subcommand + "'");
  }
  if (cfg.d < 1) throw ConfigError("--dim must be >= 1");
  if (cfg.subcommand == "constants" && cfg.d < 5) {
    throw ConfigError("block constants require d >= 5 (two-sided cut-times are empty below)");
  }
  if (cfg.subcommand == "scaling-test" && cfg.d < 5) {
    throw ConfigError("scaling-test requires d >= 5");
  }
  if (cfg.subcommand == "d4-diagnostics" && cfg.d != 4) {
    throw ConfigError("d4-diagnostics requires d = 4");
  }
  const bool needs_d4 = cfg.subcommand == "heatkernel" || cfg.subcommand == "displacement" ||
                        cfg.subcommand == "exit-times" || cfg.subcommand == "volume" ||
                        cfg.subcommand == "cuttimes";
  if (needs_d4 && cfg.d < 4) {
    throw ConfigError("subcommand '" + cfg.subcommand + "' requires d >= 4");
  }
  if (cfg.n_envs < 1 || cfg.nmax < 1 || cfg.horizon < 1 || cfg.trials < 1) {
    throw ConfigError("counts must be >= 1");
  }
  if (cfg.workers < 0) throw ConfigError("--workers must be >= 0");
  if (cfg.guard_fraction <= 0.0 || cfg.guard_fraction >= 0.5) {
    throw ConfigError("guard fraction must be in (0, 0.5)");
  }
  if (cfg.lambda_grid.empty()) throw ConfigError("lambda grid must be nonempty");
  for (double l : cfg.lambda_grid) {
    if (l <= 1.0) throw ConfigError("lambda grid entries must be > 1");
  }
}

std::vector<double> parse_lambda_grid(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad lambda grid entry '" + item + "'");
    }
  }
  return out;
}

const char* mode_name(ConductanceMode mode) {
  return mode == ConductanceMode::kUnit ? "uniform" : "weighted";
}

}  // namespace rangewalk
