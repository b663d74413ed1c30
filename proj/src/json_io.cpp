#include "bsodiag/json_io.hpp"

namespace bsodiag {

nlohmann::json event_to_json(const Event& e) {
  return {{"sns", e.sns},
          {"type_failure", e.type_failure},
          {"type_device", e.type_device},
          {"start_time", e.start_time.minutes},
          {"end_time", e.end_time.minutes},
          {"source", to_string(e.source)}};
}

Event event_from_json(const nlohmann::json& j) {
  Event e;
  for (const auto& sn : j.at("sns")) e.sns.insert(sn.get<std::string>());
  e.type_failure = j.at("type_failure").get<std::string>();
  e.type_device = j.at("type_device").get<std::string>();
  e.start_time = TimeRef{j.at("start_time").get<std::int64_t>()};
  e.end_time = TimeRef{j.at("end_time").get<std::int64_t>()};
  e.source = parse_event_source(j.value("source", std::string("alert")));
  return e;
}

}  // namespace bsodiag
