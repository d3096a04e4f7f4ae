#pragma once

// Library-internal access to the JSON form of a config.

#include <nlohmann/json.hpp>

#include "cvent/config.hpp"

namespace cvent::config {

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

}  // namespace cvent::config
