#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rangewalk/config.hpp"
#include "rangewalk/output.hpp"

namespace rangewalk {

// Output of one experiment run: a summary JSON document and named CSV series.
// Byte-identical for identical (config, master seed) regardless of worker
// count; wall-clock and worker count are reported on stderr only.
struct RunOutput {
  nlohmann::ordered_json summary;
  std::vector<std::pair<std::string, CsvTable>> series;
  int exit_code = 0;
  std::vector<std::string> warnings;
};

RunOutput run_experiment(const ExperimentConfig& cfg);

// Runs and writes <subcommand>_summary.json plus one CSV per series into
// cfg.out_dir. Returns the process exit code (0 ok, 1 invariant violation,
// 2 config error, 3 I/O error).
int run_and_write(const ExperimentConfig& cfg);

// Semantic config echo embedded in every output (excludes execution-only
// fields such as worker count and output directory).
nlohmann::ordered_json echo_config(const ExperimentConfig& cfg);

}  // namespace rangewalk
