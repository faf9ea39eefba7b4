#pragma once

#include <string>

#include "json.hpp"

namespace stratlearn::experiment {

struct RunResult {
  int exit_code = 0;  // 0 success, 2 config error, 3 stage failure
  std::string out_dir;
  std::string error;
};

// Executes the stages named in the config in dependency order
// (sample -> train_diffusion -> lid -> baselines -> movae -> generate ->
// eval), writing datasets, checkpoints, reports, and meta.json under the
// output directory. A stage failure leaves partial artifacts plus a FAILED
// marker. Deterministic stages overwrite with identical bytes on re-run.
RunResult run_experiment(const std::string& config_path);
RunResult run_experiment_json(nlohmann::json config);

}  // namespace stratlearn::experiment
