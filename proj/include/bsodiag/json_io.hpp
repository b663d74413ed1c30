#pragma once

#include <json.hpp>

#include "bsodiag/model.hpp"

namespace bsodiag {

nlohmann::json event_to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

}  // namespace bsodiag
