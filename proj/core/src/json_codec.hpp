// Private JSON codecs shared by the dataset and checkpoint writers.
#pragma once

#include <nlohmann/json.hpp>

#include "microweather/dataset.hpp"
#include "microweather/types.hpp"

namespace mw {

nlohmann::json to_json(const ChipSchema& s);
ChipSchema chip_schema_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SurfaceSchema& s);
SurfaceSchema surface_schema_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SurfaceResponse& r);
SurfaceResponse surface_response_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelConfig& c);
/// Throws SchemaError on missing keys.
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Normalization& n);
Normalization normalization_from_json(const nlohmann::json& j);

}  // namespace mw
