#include "bsodiag/mfd.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <tuple>

#include <json.hpp>

#include "bsodiag/error.hpp"
#include "bsodiag/log.hpp"
#include "bsodiag/snapshot_io.hpp"

namespace bsodiag {

DeviceClass resolve_device_class(std::string_view sn, std::string_view type, const FailureTypeCatalog& catalog,
                                 const DeviceClassResolver& resolver) {
  if (resolver) {
    if (auto cls = resolver(sn)) return *cls;
  }
  return catalog.at(type).device_class;
}

bool ChangeWhitelist::matches(std::string_view change_type, ChangeTrigger trigger,
                              std::string_view device_class) const {
  if (trigger != ChangeTrigger::proactive) return false;
  return std::any_of(rules_.begin(), rules_.end(), [&](const WhitelistRule& r) {
    return (r.change_type == "*" || r.change_type == change_type) &&
           (r.device_class == "*" || r.device_class == device_class);
  });
}

ChangeWhitelist load_whitelist(const std::string& path) {
  using json = nlohmann::json;
  std::vector<WhitelistRule> rules;
  try {
    const auto doc = json::parse(read_file(path));
    for (const auto& r : doc.at("rules")) {
      rules.push_back({r.value("change_type", std::string("*")), r.value("device_class", std::string("*"))});
    }
  } catch (const json::exception& e) {
    throw ParseError(path, e.what());
  }
  return ChangeWhitelist(std::move(rules));
}

std::map<DeviceSn, std::vector<Alert>> partition_alerts(const OutageSnapshot& snapshot) {
  std::map<DeviceSn, std::vector<Alert>> out;
  for (const auto& a : snapshot.alerts) out[a.device_sn].push_back(a);
  for (auto& [sn, list] : out) {
    std::stable_sort(list.begin(), list.end(), [](const Alert& x, const Alert& y) { return x.time < y.time; });
  }
  return out;
}

double alert_intensity(const Alert& alert, const FailureTypeCatalog& catalog, bool fallback) {
  const auto& info = catalog.at(alert.failure_type);
  if (!info.numeric) return 1.0;
  const std::regex* re = catalog.pattern(alert.failure_type);
  std::smatch m;
  if (re != nullptr && std::regex_search(alert.description, m, *re)) {
    const auto& group = m.size() > 1 && m[1].matched ? m[1] : m[0];
    const std::string text = group.str();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(value) && value >= 0.0) {
      return value;
    }
  }
  const std::string msg = "cannot extract intensity for '" + alert.failure_type + "' from '" + alert.description + "'";
  if (!fallback) throw IntensityError(msg);
  log::warn(msg + "; using 1");
  return 1.0;
}

AlertSeries alert_to_series(const DeviceSn& device, std::span<const Alert> alerts, std::int64_t delta,
                            const WindowParams& windows, const FailureTypeCatalog& catalog,
                            bool intensity_fallback) {
  if (delta <= 0) throw ConfigError("delta must be positive");
  if ((windows.L + windows.T_prime) % delta != 0) {
    throw ConfigError("delta (" + std::to_string(delta) + ") must divide L + T' (" +
                      std::to_string(windows.L + windows.T_prime) + ")");
  }
  const auto n_slots = static_cast<std::size_t>((windows.L + windows.T_prime) / delta);
  AlertSeries s;
  s.device_sn = device;
  s.slot_len = delta;
  s.origin = TimeRef{-windows.L};

  std::set<FailureTypeId> types;
  for (const auto& a : alerts) types.insert(a.failure_type);
  s.dims.assign(types.begin(), types.end());
  s.values.assign(s.dims.size(), std::vector<double>(n_slots, 0.0));

  for (const auto& a : alerts) {
    if (!windows.alert_in_window(a.time)) {
      throw ValidationError("alert at " + std::to_string(a.time.minutes) + " min lies outside the alert window");
    }
    const auto dim = static_cast<std::size_t>(
        std::lower_bound(s.dims.begin(), s.dims.end(), a.failure_type) - s.dims.begin());
    auto slot = static_cast<std::size_t>((a.time.minutes + windows.L) / delta);
    slot = std::min(slot, n_slots - 1);
    s.values[dim][slot] += alert_intensity(a, catalog, intensity_fallback);
  }
  return s;
}

std::vector<Failure> detect_failures(const AlertSeries& series, std::int64_t T, const SpotParams& spot,
                                     const FailureTypeCatalog& catalog, const DeviceClassResolver& resolver,
                                     std::optional<std::int64_t> gap_split_slots) {
  std::vector<Failure> out;
  if (series.dims.empty()) return out;
  const std::int64_t init_minutes = (-T) - series.origin.minutes;
  if (init_minutes < 0 || init_minutes % series.slot_len != 0) {
    throw ConfigError("diagnosis window start must fall on a slot boundary inside the series");
  }
  const auto n_init = static_cast<std::size_t>(init_minutes / series.slot_len);

  for (std::size_t k = 0; k < series.dims.size(); ++k) {
    const auto& row = series.values[k];
    std::span<const double> init(row.data(), n_init);
    auto state = spot_init(init, spot);
    std::vector<std::size_t> outliers;
    for (std::size_t i = n_init; i < row.size(); ++i) {
      if (spot_update(state, row[i])) outliers.push_back(i);
    }
    if (outliers.empty()) continue;

    const auto& type = series.dims[k];
    const auto cls = resolve_device_class(series.device_sn, type, catalog, resolver);
    auto emit = [&](std::size_t first, std::size_t last) {
      out.push_back(Failure{series.device_sn, type, cls, series.slot_start(first), series.slot_end(last)});
    };
    std::size_t run_first = outliers.front();
    for (std::size_t j = 1; j < outliers.size(); ++j) {
      const auto gap = static_cast<std::int64_t>(outliers[j] - outliers[j - 1] - 1);
      if (gap_split_slots && gap > *gap_split_slots) {
        emit(run_first, outliers[j - 1]);
        run_first = outliers[j];
      }
    }
    emit(run_first, outliers.back());
  }
  return out;
}

std::vector<Change> filter_changes(std::span<const Change> changes, const ChangeWhitelist& whitelist,
                                   const FailureTypeCatalog& catalog, const DeviceClassResolver& resolver) {
  std::vector<Change> out;
  for (const auto& c : changes) {
    if (c.trigger != ChangeTrigger::proactive) continue;
    const auto cls = resolve_device_class(*c.device_sns.begin(), c.change_type, catalog, resolver);
    if (whitelist.matches(c.change_type, c.trigger, cls)) out.push_back(c);
  }
  return out;
}

std::vector<Event> merge_events(std::span<const Failure> failures, std::span<const Incident> incidents,
                                std::span<const Change> proactive, std::int64_t eta, const WindowParams& windows,
                                const FailureTypeCatalog& catalog, const DeviceClassResolver& resolver) {
  if (eta <= 0) throw ConfigError("eta must be positive");
  using Key = std::tuple<std::int64_t, FailureTypeId, DeviceClass>;
  std::map<Key, Event> merged;

  auto window_of = [&](TimeRef start) {
    const std::int64_t offset = start.minutes + windows.T;
    // floor division; starts are inside [-T, T'] so offset >= 0 in practice
    return offset >= 0 ? offset / eta : -((-offset + eta - 1) / eta);
  };
  auto add = [&](const SnSet& sns, const FailureTypeId& type, const DeviceClass& cls, TimeRef start, TimeRef end,
                 EventSource source) {
    Key key{window_of(start), type, cls};
    auto [it, inserted] = merged.try_emplace(key);
    Event& e = it->second;
    if (inserted) {
      e = Event{sns, type, cls, start, end, source};
      return;
    }
    e.sns.insert(sns.begin(), sns.end());
    if (start < e.start_time || (start == e.start_time && source < e.source)) e.source = source;
    e.start_time = std::min(e.start_time, start);
    e.end_time = std::max(e.end_time, end);
  };

  for (const auto& f : failures) add(SnSet{f.sn}, f.type_failure, f.type_device, f.start_time, f.end_time, EventSource::alert);
  for (const auto& inc : incidents) {
    const auto cls = resolve_device_class(*inc.device_sns.begin(), inc.failure_type, catalog, resolver);
    add(inc.device_sns, inc.failure_type, cls, inc.start, inc.end, EventSource::incident);
  }
  for (const auto& c : proactive) {
    const auto cls = resolve_device_class(*c.device_sns.begin(), c.change_type, catalog, resolver);
    add(c.device_sns, c.change_type, cls, c.time, c.time, EventSource::change);
  }

  std::vector<Event> out;
  out.reserve(merged.size());
  for (auto& [key, e] : merged) out.push_back(std::move(e));
  std::sort(out.begin(), out.end(), event_order);
  return out;
}

MfdResult run_mfd(const OutageSnapshot& snapshot, const FailureTypeCatalog& catalog, const MfdConfig& config,
                  const DeviceClassResolver& resolver) {
  if (config.eta_minutes <= 0) throw ConfigError("eta must be positive");
  const auto& w = snapshot.windows;
  if ((w.L - w.T) % config.delta_minutes != 0) {
    throw ConfigError("delta must divide the initial window length L - T");
  }

  std::vector<Failure> failures;
  for (const auto& [sn, alerts] : partition_alerts(snapshot)) {
    const auto series = alert_to_series(sn, alerts, config.delta_minutes, w, catalog, config.intensity_fallback);
    auto found = detect_failures(series, w.T, config.spot, catalog, resolver, config.gap_split_slots);
    failures.insert(failures.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
  }

  std::vector<Incident> incidents;
  for (const auto& inc : snapshot.incidents) {
    if (inc.failure_type != snapshot.outage.type_failure) incidents.push_back(inc);
  }
  const auto changes = filter_changes(snapshot.changes, config.whitelist, catalog, resolver);

  MfdResult result;
  result.events = merge_events(failures, incidents, changes, config.eta_minutes, w, catalog, resolver);
  result.outage = snapshot.outage;
  return result;
}

}  // namespace bsodiag
