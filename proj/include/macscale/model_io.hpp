#pragma once

#include <string>

#include "json.hpp"
#include "macscale/model.hpp"

namespace macscale {

// {"n_phases", "max_down_jump", "kill_v", "blocks": {"A1", "A0", "A-1", ...}}
// Shape problems raise ValidationError; value checks are left to validate().
MacModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const MacModel& model);

MacModel load_model(const std::string& path);
void save_model(const MacModel& model, const std::string& path);

nlohmann::json matrix_to_json(const PhaseMatrix& m);
PhaseMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace macscale
