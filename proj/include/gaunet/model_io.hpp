#ifndef GAUNET_MODEL_IO_HPP
#define GAUNET_MODEL_IO_HPP

#include <string>

#include "gaunet/training.hpp"

namespace gaunet {

// Model files are JSON with explicit shape metadata. Doubles are written in
// shortest round-trip form, so save -> load -> save is byte-identical and a
// loaded model predicts exactly like the original. The major version must
// match on load; minor revisions stay readable.
inline constexpr const char* kModelSchemaVersion = "1.0";

void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text, const std::string& origin);

}  // namespace gaunet

#endif  // GAUNET_MODEL_IO_HPP
