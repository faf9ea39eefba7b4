#pragma once

#include "json.hpp"
#include "stratlearn/strata.hpp"

namespace stratlearn::strata {

nlohmann::json spec_to_json(const StratifiedSpaceSpec& spec);
StratifiedSpaceSpec spec_from_json(const nlohmann::json& j);

}  // namespace stratlearn::strata
