#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <json.hpp>

#include "bsodiag/error.hpp"
#include "bsodiag/json_io.hpp"
#include "bsodiag/mfd.hpp"
#include "bsodiag/simgen.hpp"
#include "bsodiag/snapshot_io.hpp"
#include "support/fixtures.hpp"

using namespace bsodiag;

namespace {

const FailureTypeCatalog& cat() {
  static const auto c = sim::default_catalog();
  return c;
}

Alert alert(std::int64_t t, std::string sn, std::string type, std::string desc = "") {
  return Alert{TimeRef{t}, std::move(sn), std::move(type), std::move(desc)};
}

OutageSnapshot empty_snapshot() {
  OutageSnapshot s;
  s.outage = fixture::event({"SRV-1"}, std::string(kDefaultOutageType), "server", 0, 15, EventSource::incident);
  return s;
}

// Series with one dimension whose diagnosis-window slots listed in `hot` carry
// value 50 over a zero background.
AlertSeries series_with_hot_slots(const std::vector<std::int64_t>& hot_minutes) {
  AlertSeries s;
  s.device_sn = "TOR-1";
  s.dims = {"Switch Reboot"};
  s.origin = TimeRef{-240};
  s.values.assign(1, std::vector<double>(255, 0.0));
  for (auto m : hot_minutes) s.values[0][static_cast<std::size_t>(m + 240)] = 50.0;
  return s;
}

}  // namespace

TEST_CASE("partition_alerts: empty snapshot gives an empty map") {
  CHECK(partition_alerts(empty_snapshot()).empty());
}

TEST_CASE("partition_alerts: counts per device") {
  auto s = empty_snapshot();
  for (int i = 0; i < 3; ++i) s.alerts.push_back(alert(-10 + i, "a", "Switch Reboot"));
  s.alerts.push_back(alert(-5, "b", "Switch Reboot"));
  const auto parts = partition_alerts(s);
  REQUIRE(parts.size() == 2);
  CHECK(parts.at("a").size() == 3);
  CHECK(parts.at("b").size() == 1);
}

TEST_CASE("partition_alerts: subsets are chronological and cover every alert") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> t(-240, 15), d(0, 4);
  auto s = empty_snapshot();
  for (int i = 0; i < 300; ++i) s.alerts.push_back(alert(t(rng), "D" + std::to_string(d(rng)), "Switch Reboot"));
  const auto parts = partition_alerts(s);
  std::size_t total = 0;
  for (const auto& [sn, list] : parts) {
    total += list.size();
    CHECK(std::is_sorted(list.begin(), list.end(), [](const Alert& a, const Alert& b) { return a.time < b.time; }));
    std::vector<Alert> expect;
    for (const auto& a : s.alerts) {
      if (a.device_sn == sn) expect.push_back(a);
    }
    std::stable_sort(expect.begin(), expect.end(), [](const Alert& a, const Alert& b) { return a.time < b.time; });
    CHECK(list == expect);
  }
  CHECK(total == s.alerts.size());
}

TEST_CASE("alert_intensity: non-numeric types count 1, numeric types use the pattern") {
  CHECK(alert_intensity(alert(0, "a", "Switch Reboot", "rebooted"), cat()) == 1.0);
  CHECK(alert_intensity(alert(0, "a", "High CPU Utilization", "cpu_util=93.5"), cat()) == 93.5);
  CHECK(alert_intensity(alert(0, "a", "Partial Network Loss", "link loss=12% on port 3"), cat()) == 12.0);
  CHECK_THROWS_AS(alert_intensity(alert(0, "a", "High CPU Utilization", "sensor offline"), cat()), IntensityError);
  CHECK(alert_intensity(alert(0, "a", "High CPU Utilization", "sensor offline"), cat(), true) == 1.0);
}

TEST_CASE("alert_to_series: one alert at -30 lands in slot 210 of 255") {
  const std::vector<Alert> alerts{alert(-30, "TOR-1", "Switch Reboot")};
  const auto s = alert_to_series("TOR-1", alerts, 1, WindowParams{}, cat());
  REQUIRE(s.dims == std::vector<FailureTypeId>{"Switch Reboot"});
  REQUIRE(s.slots() == 255);
  for (std::size_t i = 0; i < 255; ++i) CHECK(s.values[0][i] == (i == 210 ? 1.0 : 0.0));
  CHECK(s.slot_start(210).minutes == -30);
  CHECK(s.slot_end(210).minutes == -29);
}

TEST_CASE("alert_to_series: same slot sums, T' goes to the last slot, delta must divide") {
  const std::vector<Alert> alerts{alert(-30, "TOR-1", "Switch Reboot"), alert(-30, "TOR-1", "Switch Reboot"),
                                  alert(15, "TOR-1", "Switch Reboot")};
  const auto s = alert_to_series("TOR-1", alerts, 1, WindowParams{}, cat());
  CHECK(s.values[0][210] == 2.0);
  CHECK(s.values[0][254] == 1.0);
  CHECK_THROWS_AS(alert_to_series("TOR-1", alerts, 7, WindowParams{}, cat()), ConfigError);
  const auto five = alert_to_series("TOR-1", alerts, 5, WindowParams{}, cat());
  CHECK(five.slots() == 51);
  CHECK(five.values[0][42] == 2.0);
  CHECK_THROWS_AS(alert_to_series("TOR-1", std::vector<Alert>{alert(-300, "TOR-1", "Switch Reboot")}, 1,
                                  WindowParams{}, cat()),
                  ValidationError);
}

TEST_CASE("alert_to_series: cell sum equals the device's total intensity") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> t(-240, 15);
  std::uniform_real_distribution<double> v(0.0, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Alert> alerts;
    double expect = 0.0;
    for (int i = 0; i < 200; ++i) {
      if (i % 2 == 0) {
        alerts.push_back(alert(t(rng), "S", "Switch Reboot"));
        expect += 1.0;
      } else {
        char buf[32];
        const double x = std::round(v(rng) * 10) / 10;
        std::snprintf(buf, sizeof buf, "cpu_util=%.1f", x);
        alerts.push_back(alert(t(rng), "S", "High CPU Utilization", buf));
        expect += x;
      }
    }
    const auto s = alert_to_series("S", alerts, 5, WindowParams{}, cat());
    double sum = 0.0;
    for (const auto& row : s.values) sum = std::accumulate(row.begin(), row.end(), sum);
    CHECK(sum == doctest::Approx(expect));
  }
}

TEST_CASE("detect_failures: a quiet series yields nothing") {
  CHECK(detect_failures(series_with_hot_slots({}), 120, {}, cat()).empty());
}

TEST_CASE("detect_failures: outliers of one dimension consolidate into one failure") {
  const auto f = detect_failures(series_with_hot_slots({-10, -2}), 120, {}, cat());
  REQUIRE(f.size() == 1);
  CHECK(f[0].start_time.minutes == -10);
  CHECK(f[0].end_time.minutes == -1);
  CHECK(f[0].sn == "TOR-1");
  CHECK(f[0].type_failure == "Switch Reboot");
  CHECK(f[0].type_device == "agg_switch");  // catalog fallback without a resolver
  const auto split = detect_failures(series_with_hot_slots({-10, -2}), 120, {}, cat(), {}, 3);
  CHECK(split.size() == 2);
  const auto resolved = detect_failures(series_with_hot_slots({-10}), 120, {}, cat(),
                                        [](std::string_view) { return std::optional<DeviceClass>("tor_switch"); });
  CHECK(resolved[0].type_device == "tor_switch");
}

TEST_CASE("detect_failures: two hot dimensions give two failures") {
  auto s = series_with_hot_slots({-10});
  s.dims.push_back("Switch Port Down");
  s.values.push_back(std::vector<double>(255, 0.0));
  s.values[1][200] = 4.0;
  const auto f = detect_failures(s, 120, {}, cat());
  CHECK(f.size() == 2);
}

TEST_CASE("filter_changes: only proactive changes that match a rule survive, in order") {
  const Change replace1{TimeRef{-20}, {"PDU-1"}, "PSU Replacement", ChangeTrigger::proactive, ""};
  const Change migrate{TimeRef{-15}, {"SRV-1"}, "VM Migration", ChangeTrigger::passive, ""};
  const Change replace2{TimeRef{-10}, {"PDU-2"}, "PSU Replacement", ChangeTrigger::proactive, ""};
  std::map<FailureTypeId, FailureTypeInfo> e{{"PSU Replacement", {4, "pdu", false, ""}},
                                             {"VM Migration", {2, "server", false, ""}},
                                             {"Firmware Upgrade", {5, "agg_switch", false, ""}}};
  const FailureTypeCatalog c(e);
  const std::vector<Change> all{replace1, migrate, replace2};
  const ChangeWhitelist rules(std::vector<WhitelistRule>{{"PSU Replacement", "*"}});
  CHECK(filter_changes(std::vector<Change>{migrate}, rules, c).empty());
  CHECK(filter_changes(all, rules, c) == std::vector<Change>{replace1, replace2});
  const Change fw{TimeRef{-5}, {"AGG-1"}, "Firmware Upgrade", ChangeTrigger::proactive, ""};
  CHECK(filter_changes(std::vector<Change>{fw}, rules, c).empty());
  CHECK(filter_changes(std::vector<Change>{fw}, ChangeWhitelist::allow_all(), c).size() == 1);
  CHECK(filter_changes(std::vector<Change>{migrate}, ChangeWhitelist::allow_all(), c).empty());
  CHECK_FALSE(ChangeWhitelist(std::vector<WhitelistRule>{{"*", "pdu"}}).matches("Firmware Upgrade", ChangeTrigger::proactive, "agg_switch"));
}

TEST_CASE("load_whitelist reads rules and defaults missing fields to wildcards") {
  fixture::TempDir dir;
  write_file(dir / "wl.json", R"({"rules":[{"change_type":"Firmware Upgrade"},{"device_class":"pdu"}]})");
  const auto wl = load_whitelist((dir / "wl.json").string());
  CHECK(wl.rules() == std::vector<WhitelistRule>{{"Firmware Upgrade", "*"}, {"*", "pdu"}});
  write_file(dir / "bad.json", R"({"rulez":[]})");
  CHECK_THROWS_AS(load_whitelist((dir / "bad.json").string()), ParseError);
}

TEST_CASE("merge_events: same type within one eta-window merges") {
  const std::vector<Failure> f{{"a", "Switch Reboot", "tor_switch", TimeRef{-8}, TimeRef{-6}},
                               {"b", "Switch Reboot", "tor_switch", TimeRef{-7}, TimeRef{-2}}};
  const auto e = merge_events(f, {}, {}, 5, WindowParams{}, cat());
  REQUIRE(e.size() == 1);
  CHECK(e[0].sns == SnSet{"a", "b"});
  CHECK(e[0].start_time.minutes == -8);
  CHECK(e[0].end_time.minutes == -2);
}

TEST_CASE("merge_events: different eta-windows stay apart, empty stays empty") {
  const std::vector<Failure> f{{"a", "Switch Reboot", "tor_switch", TimeRef{-8}, TimeRef{-7}},
                               {"b", "Switch Reboot", "tor_switch", TimeRef{-1}, TimeRef{0}}};
  CHECK(merge_events(f, {}, {}, 5, WindowParams{}, cat()).size() == 2);
  CHECK(merge_events({}, {}, {}, 5, WindowParams{}, cat()).empty());
  CHECK_THROWS_AS(merge_events(f, {}, {}, 0, WindowParams{}, cat()), ConfigError);
}

TEST_CASE("merge_events: windows align to -T and classes are kept apart") {
  // -120 + 5m: -11 and -10 sit in different windows.
  const std::vector<Failure> f{{"a", "Switch Reboot", "tor_switch", TimeRef{-11}, TimeRef{-10}},
                               {"b", "Switch Reboot", "tor_switch", TimeRef{-10}, TimeRef{-9}},
                               {"c", "Switch Reboot", "agg_switch", TimeRef{-10}, TimeRef{-9}}};
  const auto e = merge_events(f, {}, {}, 5, WindowParams{}, cat());
  CHECK(e.size() == 3);
}

TEST_CASE("merge_events: incidents and changes join alert failures") {
  const std::vector<Failure> f{{"TOR-1", "Switch Reboot", "agg_switch", TimeRef{-9}, TimeRef{-7}}};
  const std::vector<Incident> inc{{TimeRef{-8}, TimeRef{-3}, {"TOR-2"}, "Switch Reboot", ""}};
  const std::vector<Change> ch{{TimeRef{-30}, {"AGG-1"}, "Firmware Upgrade", ChangeTrigger::proactive, ""}};
  const auto e = merge_events(f, inc, ch, 5, WindowParams{}, cat());
  REQUIRE(e.size() == 2);
  CHECK(e[0].type_failure == "Firmware Upgrade");
  CHECK(e[0].source == EventSource::change);
  CHECK(e[0].start_time == e[0].end_time);
  CHECK(e[1].sns == SnSet{"TOR-1", "TOR-2"});
  CHECK(e[1].end_time.minutes == -3);
  CHECK(e[1].source == EventSource::alert);  // earliest constituent
}

TEST_CASE("merge_events: output is ordered by start then type") {
  const std::vector<Failure> f{{"x", "Switch Reboot", "agg_switch", TimeRef{-50}, TimeRef{-49}},
                               {"y", "Switch Port Down", "tor_switch", TimeRef{-50}, TimeRef{-49}},
                               {"z", "PSU Power Outage", "pdu", TimeRef{-90}, TimeRef{-80}}};
  const auto e = merge_events(f, {}, {}, 5, WindowParams{}, cat());
  REQUIRE(e.size() == 3);
  CHECK(e[0].type_failure == "PSU Power Outage");
  CHECK(e[1].type_failure == "Switch Port Down");
  CHECK(e[2].type_failure == "Switch Reboot");
}

TEST_CASE("run_mfd: only the outage incident gives an empty event set") {
  auto s = empty_snapshot();
  s.incidents.push_back({TimeRef{0}, TimeRef{15}, {"SRV-1"}, std::string(kDefaultOutageType), ""});
  const auto r = run_mfd(s, cat(), {});
  CHECK(r.events.empty());
  CHECK(r.outage.sns == SnSet{"SRV-1"});
}

TEST_CASE("run_mfd on generated scenarios") {
  const auto cmdb = sim::generate_topology({});
  const auto resolver = [&](std::string_view sn) { return cmdb.device_class(sn); };

  SUBCASE("the injected root cause type appears in E") {
    auto spec = sim::default_scenario();
    spec.noise = sim::zero_noise();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto sc = sim::inject_scenario(cmdb, spec, seed);
      const auto r = run_mfd(sc.snapshot, cat(), {}, resolver);
      REQUIRE(sc.truth.root_cause);
      const bool found = std::any_of(r.events.begin(), r.events.end(), [&](const Event& e) {
        return e.type_failure == sc.truth.root_cause->type_failure &&
               std::any_of(e.sns.begin(), e.sns.end(), [&](const auto& sn) { return sc.truth.root_cause->sns.count(sn); });
      });
      CHECK(found);
      for (const auto& e : r.events) {
        CHECK(e.start_time.minutes >= -120);
        CHECK(e.end_time.minutes <= 15);
        CHECK(e.start_time <= e.end_time);
      }
    }
  }

  SUBCASE("stationary flooding noise produces no events") {
    auto spec = sim::default_scenario();
    spec.chains.clear();
    spec.noise = sim::zero_noise();
    spec.noise.fp_alert_rate = 40.0;
    spec.noise.stream_probability = 1.0;
    spec.noise.flooding = 20.0;
    spec.noise.flood_fraction = 1.0;
    std::size_t flagged = 0, streams = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto sc = sim::inject_scenario(cmdb, spec, seed);
      streams += partition_alerts(sc.snapshot).size();
      flagged += run_mfd(sc.snapshot, cat(), {}, resolver).events.size();
    }
    CHECK(streams > 100);
    CHECK(flagged == 0);
  }

  SUBCASE("identical input gives byte-identical output") {
    const auto sc = sim::inject_scenario(cmdb, sim::default_scenario(), 5);
    auto dump = [&] {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& e : run_mfd(sc.snapshot, cat(), {}, resolver).events) j.push_back(event_to_json(e));
      return j.dump();
    };
    CHECK(dump() == dump());
  }
}
