#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bsodiag/time.hpp"

namespace bsodiag {

using DeviceSn = std::string;
using FailureTypeId = std::string;
using DeviceClass = std::string;
using SnSet = std::set<DeviceSn>;

inline constexpr std::string_view kDefaultOutageType = "Batch Servers Outage";

/// Collection windows around the outage, in minutes. Alerts span [-L, T'],
/// incidents and changes span [-T, T'].
struct WindowParams {
  std::int64_t L = 240;
  std::int64_t T = 120;
  std::int64_t T_prime = 15;

  bool alert_in_window(TimeRef t) const { return t.minutes >= -L && t.minutes <= T_prime; }
  bool diag_in_window(TimeRef t) const { return t.minutes >= -T && t.minutes <= T_prime; }
  void validate() const;

  friend bool operator==(const WindowParams&, const WindowParams&) = default;
};

struct Alert {
  TimeRef time;
  DeviceSn device_sn;
  FailureTypeId failure_type;
  std::string description;

  friend bool operator==(const Alert&, const Alert&) = default;
};

struct Incident {
  TimeRef start;
  TimeRef end;
  SnSet device_sns;
  FailureTypeId failure_type;
  std::string description;

  friend bool operator==(const Incident&, const Incident&) = default;
};

enum class ChangeTrigger { proactive, passive };

std::string_view to_string(ChangeTrigger t);
ChangeTrigger parse_change_trigger(std::string_view text);

struct Change {
  TimeRef time;
  SnSet device_sns;
  FailureTypeId change_type;
  ChangeTrigger trigger = ChangeTrigger::proactive;
  std::string description;

  friend bool operator==(const Change&, const Change&) = default;
};

/// A single-device failure consolidated from alert outliers.
struct Failure {
  DeviceSn sn;
  FailureTypeId type_failure;
  DeviceClass type_device;
  TimeRef start_time;
  TimeRef end_time;

  friend bool operator==(const Failure&, const Failure&) = default;
};

enum class EventSource { alert, incident, change };

std::string_view to_string(EventSource s);
EventSource parse_event_source(std::string_view text);

/// Unified failure representation produced by event merge.
struct Event {
  SnSet sns;
  FailureTypeId type_failure;
  DeviceClass type_device;
  TimeRef start_time;
  TimeRef end_time;
  EventSource source = EventSource::alert;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Ordering used for every event list: start time, then type, class and devices.
bool event_order(const Event& a, const Event& b);

struct FailureTypeInfo {
  int level = 0;
  DeviceClass device_class;
  bool numeric = false;
  std::string extraction_pattern;

  friend bool operator==(const FailureTypeInfo& a, const FailureTypeInfo& b) {
    return a.level == b.level && a.device_class == b.device_class && a.numeric == b.numeric &&
           a.extraction_pattern == b.extraction_pattern;
  }
};

enum class CatalogMode { strict, permissive };

/// Failure-type catalog with the rule-tree hierarchy level of each type.
/// Immutable after construction; extraction patterns are compiled once.
class FailureTypeCatalog {
 public:
  FailureTypeCatalog() = default;
  explicit FailureTypeCatalog(std::map<FailureTypeId, FailureTypeInfo> entries,
                              CatalogMode mode = CatalogMode::strict);

  bool contains(std::string_view id) const;
  /// Entry for `id`. In permissive mode unknown ids resolve to level 0,
  /// non-numeric, device class "unknown"; in strict mode they throw.
  const FailureTypeInfo& at(std::string_view id) const;
  int level(std::string_view id) const { return at(id).level; }
  /// Compiled extraction pattern, or nullptr for non-numeric types.
  const std::regex* pattern(std::string_view id) const;

  CatalogMode mode() const { return mode_; }
  const std::map<FailureTypeId, FailureTypeInfo, std::less<>>& entries() const { return entries_; }

  friend bool operator==(const FailureTypeCatalog& a, const FailureTypeCatalog& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::map<FailureTypeId, FailureTypeInfo, std::less<>> entries_;
  std::map<FailureTypeId, std::shared_ptr<const std::regex>, std::less<>> patterns_;
  CatalogMode mode_ = CatalogMode::strict;
};

/// Everything collected around one outage, on the relative-time axis.
struct OutageSnapshot {
  std::string outage_id;
  SysSeconds outage_time{};
  Event outage;
  std::vector<Alert> alerts;
  std::vector<Incident> incidents;
  std::vector<Change> changes;
  WindowParams windows;

  friend bool operator==(const OutageSnapshot&, const OutageSnapshot&) = default;
};

/// Checks window membership, catalog membership and record invariants.
/// Throws ValidationError on the first violation.
void validate_snapshot(const OutageSnapshot& snapshot, const FailureTypeCatalog& catalog);

}  // namespace bsodiag
