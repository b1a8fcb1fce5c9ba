#ifndef GAUNET_JSON_HELPERS_HPP
#define GAUNET_JSON_HELPERS_HPP

// Internal JSON (de)serialization shared by the model file format, the
// experiment runner, and the command line. Not installed with the public
// headers.

#include "json.hpp"

#include "gaunet/data.hpp"
#include "gaunet/training.hpp"

namespace gaunet {

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json synthetic_config_to_json(const SyntheticConfig& cfg);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

nlohmann::json generation_stats_to_json(const GenerationStats& stats);

}  // namespace gaunet

#endif  // GAUNET_JSON_HELPERS_HPP
