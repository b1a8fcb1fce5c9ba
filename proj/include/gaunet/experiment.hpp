#ifndef GAUNET_EXPERIMENT_HPP
#define GAUNET_EXPERIMENT_HPP

#include <string>

#include "gaunet/training.hpp"

namespace gaunet {

// Runs a full study from a JSON config: dataset (generated or loaded),
// optional VIF screen, one fit or cross-validation per model spec, accuracy
// and log-likelihood tables, policy sweeps, curve and importance exports.
// Everything is seeded, files are written in a fixed order, and doubles are
// serialized in shortest round-trip form, so a rerun with the same config
// reproduces every output byte for byte.
struct ExperimentResult {
  std::string out_dir;
  std::string results_json;  // also written to <out_dir>/results.json
};

ExperimentResult run_experiment(const std::string& config_text, const std::string& config_origin,
                                const std::string& out_dir_override = "");
ExperimentResult run_experiment_file(const std::string& config_path,
                                     const std::string& out_dir_override = "");

}  // namespace gaunet

#endif  // GAUNET_EXPERIMENT_HPP
