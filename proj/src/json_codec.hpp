#pragma once

// JSON mappings for types that appear in more than one on-disk or wire format.

#include "aeye/arbitration.hpp"
#include "aeye/error.hpp"
#include "json.hpp"

namespace aeye {

inline void to_json(nlohmann::json& j, const ControlCommand& c) {
  j = nlohmann::json{{"steer", c.steer}, {"throttle", c.throttle}, {"brake", c.brake}};
}

inline void from_json(const nlohmann::json& j, ControlCommand& c) {
  c.steer = j.at("steer").get<double>();
  c.throttle = j.at("throttle").get<double>();
  c.brake = j.at("brake").get<double>();
}

inline void to_json(nlohmann::json& j, const InterventionEvent& e) {
  j = nlohmann::json{{"timestamp", e.timestamp},
                     {"odometer_km", e.odometer_km},
                     {"cause", std::string(cause_name(e.cause))},
                     {"comment", e.comment}};
}

inline void from_json(const nlohmann::json& j, InterventionEvent& e) {
  e.timestamp = j.at("timestamp").get<double>();
  e.odometer_km = j.at("odometer_km").get<double>();
  const auto cause = cause_from_name(j.at("cause").get<std::string>());
  if (!cause) throw InputError("unknown intervention cause " + j.at("cause").dump());
  e.cause = *cause;
  e.comment = j.value("comment", std::string{});
}

}  // namespace aeye
