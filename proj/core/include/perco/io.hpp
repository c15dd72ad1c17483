#pragma once

#include <nlohmann/json.hpp>

#include "perco/events.hpp"
#include "perco/models.hpp"

namespace perco {

inline constexpr const char* kRealizationSchema = "perco.realization/1";

nlohmann::json to_json(const Box& b);
nlohmann::json to_json(const Segment& s);
nlohmann::json to_json(const Realization& r);
// Throws std::invalid_argument on a malformed document.
Realization realization_from_json(const nlohmann::json& j);

// Realization document with a "witness" section added.
nlohmann::json witness_to_json(const Realization& r, const EventOutcome& outcome, const std::string& event);

}  // namespace perco
