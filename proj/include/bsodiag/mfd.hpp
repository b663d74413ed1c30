#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsodiag/model.hpp"
#include "bsodiag/spot.hpp"

namespace bsodiag {

/// Maps a device serial number to its device class, if known (usually the CMDB).
using DeviceClassResolver = std::function<std::optional<DeviceClass>(std::string_view)>;

/// Device class of `sn`: resolver first, catalog class of `type` as fallback.
DeviceClass resolve_device_class(std::string_view sn, std::string_view type, const FailureTypeCatalog& catalog,
                                 const DeviceClassResolver& resolver);

/// Cumulative alert intensity per failure type and time slot for one device.
struct AlertSeries {
  DeviceSn device_sn;
  std::vector<FailureTypeId> dims;         // sorted, one per failure type present
  std::vector<std::vector<double>> values;  // dims.size() x N
  std::int64_t slot_len = 1;                // delta, minutes
  TimeRef origin;                           // start of slot 0 (= -L)

  std::size_t slots() const { return values.empty() ? 0 : values.front().size(); }
  TimeRef slot_start(std::size_t i) const { return origin + static_cast<std::int64_t>(i) * slot_len; }
  TimeRef slot_end(std::size_t i) const { return slot_start(i) + slot_len; }
};

/// One whitelist predicate. "*" matches anything. Only proactive changes
/// are ever retained, regardless of rules.
struct WhitelistRule {
  std::string change_type = "*";
  std::string device_class = "*";

  friend bool operator==(const WhitelistRule&, const WhitelistRule&) = default;
};

class ChangeWhitelist {
 public:
  ChangeWhitelist() = default;
  explicit ChangeWhitelist(std::vector<WhitelistRule> rules) : rules_(std::move(rules)) {}

  /// A whitelist with a single wildcard rule (every proactive change passes).
  static ChangeWhitelist allow_all() { return ChangeWhitelist({WhitelistRule{}}); }

  bool matches(std::string_view change_type, ChangeTrigger trigger, std::string_view device_class) const;
  const std::vector<WhitelistRule>& rules() const { return rules_; }

  friend bool operator==(const ChangeWhitelist&, const ChangeWhitelist&) = default;

 private:
  std::vector<WhitelistRule> rules_;
};

ChangeWhitelist load_whitelist(const std::string& path);

struct MfdConfig {
  std::int64_t delta_minutes = 1;
  std::int64_t eta_minutes = 5;
  SpotParams spot;
  /// Numeric alerts whose description does not match fall back to intensity 1.
  bool intensity_fallback = false;
  /// Split a dimension's outliers into separate failures at gaps larger than
  /// this many slots. Unset: all outliers of a dimension form one failure.
  std::optional<std::int64_t> gap_split_slots;
  ChangeWhitelist whitelist = ChangeWhitelist::allow_all();
};

std::map<DeviceSn, std::vector<Alert>> partition_alerts(const OutageSnapshot& snapshot);

/// Numeric value captured by the catalog pattern (first capture group, or the
/// whole match), or 1 for non-numeric types.
double alert_intensity(const Alert& alert, const FailureTypeCatalog& catalog, bool fallback = false);

/// Slot i covers [i*delta - L, (i+1)*delta - L); an alert at exactly T' is
/// counted in the last slot.
AlertSeries alert_to_series(const DeviceSn& device, std::span<const Alert> alerts, std::int64_t delta,
                            const WindowParams& windows, const FailureTypeCatalog& catalog,
                            bool intensity_fallback = false);

/// SPOT per dimension: initialised on slots in [-L, -T), streamed over
/// [-T, T'). Outlier slots of one dimension consolidate into one failure.
std::vector<Failure> detect_failures(const AlertSeries& series, std::int64_t T, const SpotParams& spot,
                                     const FailureTypeCatalog& catalog, const DeviceClassResolver& resolver = {},
                                     std::optional<std::int64_t> gap_split_slots = std::nullopt);

std::vector<Change> filter_changes(std::span<const Change> changes, const ChangeWhitelist& whitelist,
                                   const FailureTypeCatalog& catalog, const DeviceClassResolver& resolver = {});

/// Merges failures, incidents and proactive changes into events. The
/// diagnosis window is cut into eta-windows aligned to -T; inside a window,
/// items sharing (type_failure, type_device) become one event.
std::vector<Event> merge_events(std::span<const Failure> failures, std::span<const Incident> incidents,
                                std::span<const Change> proactive, std::int64_t eta, const WindowParams& windows,
                                const FailureTypeCatalog& catalog, const DeviceClassResolver& resolver = {});

struct MfdResult {
  std::vector<Event> events;  // E, outage excluded
  Event outage;
};

MfdResult run_mfd(const OutageSnapshot& snapshot, const FailureTypeCatalog& catalog, const MfdConfig& config,
                  const DeviceClassResolver& resolver = {});

}  // namespace bsodiag
