#include "bsodiag/model.hpp"

#include <tuple>

#include "bsodiag/error.hpp"

namespace bsodiag {

void WindowParams::validate() const {
  if (L <= 0 || T <= 0 || T_prime <= 0) throw ConfigError("window durations must be positive");
  if (T > L) throw ConfigError("diagnosis window T must not exceed alert window L");
}

std::string_view to_string(ChangeTrigger t) {
  return t == ChangeTrigger::proactive ? "proactive" : "passive";
}

ChangeTrigger parse_change_trigger(std::string_view text) {
  if (text == "proactive") return ChangeTrigger::proactive;
  if (text == "passive") return ChangeTrigger::passive;
  throw ParseError("trigger", "expected 'proactive' or 'passive', got '" + std::string(text) + "'");
}

std::string_view to_string(EventSource s) {
  switch (s) {
    case EventSource::alert: return "alert";
    case EventSource::incident: return "incident";
    case EventSource::change: return "change";
  }
  return "alert";
}

EventSource parse_event_source(std::string_view text) {
  if (text == "alert") return EventSource::alert;
  if (text == "incident") return EventSource::incident;
  if (text == "change") return EventSource::change;
  throw ParseError("source", "unknown event source '" + std::string(text) + "'");
}

bool event_order(const Event& a, const Event& b) {
  return std::tie(a.start_time, a.type_failure, a.type_device, a.sns, a.end_time) <
         std::tie(b.start_time, b.type_failure, b.type_device, b.sns, b.end_time);
}

FailureTypeCatalog::FailureTypeCatalog(std::map<FailureTypeId, FailureTypeInfo> entries, CatalogMode mode)
    : entries_(entries.begin(), entries.end()), mode_(mode) {
  for (const auto& [id, info] : entries_) {
    if (info.level <= 0) throw ValidationError("catalog: level of '" + id + "' must be a positive integer");
    if (info.numeric) {
      if (info.extraction_pattern.empty()) {
        throw ValidationError("catalog: numeric type '" + id + "' needs an extraction pattern");
      }
      try {
        patterns_.emplace(id, std::make_shared<const std::regex>(info.extraction_pattern));
      } catch (const std::regex_error& e) {
        throw ValidationError("catalog: bad extraction pattern for '" + id + "': " + e.what());
      }
    }
  }
}

bool FailureTypeCatalog::contains(std::string_view id) const { return entries_.find(id) != entries_.end(); }

const FailureTypeInfo& FailureTypeCatalog::at(std::string_view id) const {
  static const FailureTypeInfo unknown{0, "unknown", false, ""};
  if (auto it = entries_.find(id); it != entries_.end()) return it->second;
  if (mode_ == CatalogMode::permissive) return unknown;
  throw ValidationError("unknown failure type '" + std::string(id) + "'");
}

const std::regex* FailureTypeCatalog::pattern(std::string_view id) const {
  auto it = patterns_.find(id);
  return it == patterns_.end() ? nullptr : it->second.get();
}

namespace {

std::string at_time(TimeRef t) { return std::to_string(t.minutes) + " min"; }

void check_type(const FailureTypeCatalog& catalog, const std::string& what, const FailureTypeId& id) {
  if (!catalog.contains(id) && catalog.mode() == CatalogMode::strict) {
    throw ValidationError(what + ": unknown failure type '" + id + "'");
  }
}

}  // namespace

void validate_snapshot(const OutageSnapshot& snapshot, const FailureTypeCatalog& catalog) {
  const auto& w = snapshot.windows;
  w.validate();
  if (snapshot.outage.sns.empty()) throw ValidationError("outage: device set is empty");
  for (std::size_t i = 0; i < snapshot.alerts.size(); ++i) {
    const auto& a = snapshot.alerts[i];
    const std::string what = "alert #" + std::to_string(i + 1);
    if (!w.alert_in_window(a.time)) {
      throw ValidationError(what + ": time " + at_time(a.time) + " outside [-" + std::to_string(w.L) + ", " +
                            std::to_string(w.T_prime) + "]");
    }
    if (a.device_sn.empty()) throw ValidationError(what + ": empty device_sn");
    check_type(catalog, what, a.failure_type);
  }
  for (std::size_t i = 0; i < snapshot.incidents.size(); ++i) {
    const auto& inc = snapshot.incidents[i];
    const std::string what = "incident #" + std::to_string(i + 1);
    if (inc.start > inc.end) throw ValidationError(what + ": start after end");
    if (!w.diag_in_window(inc.start) || !w.diag_in_window(inc.end)) {
      throw ValidationError(what + ": span [" + at_time(inc.start) + ", " + at_time(inc.end) + "] outside [-" +
                            std::to_string(w.T) + ", " + std::to_string(w.T_prime) + "]");
    }
    if (inc.device_sns.empty()) throw ValidationError(what + ": device_sns is empty");
    check_type(catalog, what, inc.failure_type);
  }
  for (std::size_t i = 0; i < snapshot.changes.size(); ++i) {
    const auto& c = snapshot.changes[i];
    const std::string what = "change #" + std::to_string(i + 1);
    if (!w.diag_in_window(c.time)) {
      throw ValidationError(what + ": time " + at_time(c.time) + " outside [-" + std::to_string(w.T) + ", " +
                            std::to_string(w.T_prime) + "]");
    }
    if (c.device_sns.empty()) throw ValidationError(what + ": device_sns is empty");
    check_type(catalog, what, c.change_type);
  }
}

}  // namespace bsodiag
