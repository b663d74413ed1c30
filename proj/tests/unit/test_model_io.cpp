#include <doctest.h>

#include <sstream>

#include "bsodiag/cmdb.hpp"
#include "bsodiag/csv.hpp"
#include "bsodiag/error.hpp"
#include "bsodiag/json_io.hpp"
#include "bsodiag/simgen.hpp"
#include "bsodiag/snapshot_io.hpp"
#include "bsodiag/time.hpp"
#include "support/fixtures.hpp"

using namespace bsodiag;

namespace {

const char* kOutage = "2024-03-01T12:00:00Z";

void write_bundle(const std::filesystem::path& dir, const std::string& alerts, const std::string& incidents,
                  const std::string& changes = "time,device_sns,change_type,trigger,description\n") {
  write_file(dir / "meta.json", std::string(R"({"outage_id":"u1","outage_time":")") + kOutage +
                                    R"(","outage_sns":["SRV-1","SRV-2"]})");
  write_file(dir / "alerts.csv", alerts);
  write_file(dir / "incidents.csv", incidents);
  write_file(dir / "changes.csv", changes);
}

const std::string kAlertHeader = "time,device_sn,failure_type,description\n";
const std::string kIncidentHeader = "start_time,end_time,device_sns,failure_type,description\n";
const std::string kOutageIncident = "2024-03-01T12:00:00Z,2024-03-01T12:15:00Z,SRV-1;SRV-2,Batch Servers Outage,down\n";

}  // namespace

TEST_CASE("timestamps parse, format and convert to the relative axis") {
  const auto t = parse_iso8601("2024-03-01T12:00:00Z");
  CHECK(format_iso8601(t) == "2024-03-01T12:00:00Z");
  CHECK(to_relative(parse_iso8601("2024-03-01T11:30:00Z"), t).minutes == -30);
  CHECK(to_relative(parse_iso8601("2024-03-01T11:29:30Z"), t).minutes == -31);  // floored
  CHECK(to_relative(parse_iso8601("2024-03-01T12:15:00Z"), t).minutes == 15);
  CHECK(to_absolute(TimeRef{-130}, t) == parse_iso8601("2024-03-01T09:50:00Z"));
  CHECK(TimeRef{-90}.hours() == doctest::Approx(-1.5));
  CHECK_THROWS_AS(parse_iso8601("2024-03-01 12:00:00"), ParseError);
  CHECK_THROWS_AS(parse_iso8601("2024-02-30T12:00:00Z"), ParseError);
  CHECK_THROWS_AS(parse_iso8601("2024-03-01T25:00:00Z"), ParseError);
}

TEST_CASE("window defaults are [-240,-120) init and [-120,15] diagnosis") {
  WindowParams w;
  CHECK(w.L == 240);
  CHECK(w.T == 120);
  CHECK(w.T_prime == 15);
  CHECK(w.alert_in_window(TimeRef{-240}));
  CHECK_FALSE(w.alert_in_window(TimeRef{-241}));
  CHECK(w.diag_in_window(TimeRef{15}));
  CHECK_FALSE(w.diag_in_window(TimeRef{-121}));
  WindowParams bad;
  bad.T = 300;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.T_prime = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("catalog: strict rejects unknown types, permissive maps them to level 0") {
  std::map<FailureTypeId, FailureTypeInfo> e{{"Switch Reboot", {5, "tor_switch", false, ""}}};
  FailureTypeCatalog strict(e);
  CHECK(strict.level("Switch Reboot") == 5);
  CHECK_THROWS_AS(strict.at("Nope"), ValidationError);
  FailureTypeCatalog loose(e, CatalogMode::permissive);
  CHECK(loose.level("Nope") == 0);
  CHECK_FALSE(loose.at("Nope").numeric);

  CHECK_THROWS_AS(FailureTypeCatalog({{"x", {0, "c", false, ""}}}), ValidationError);
  CHECK_THROWS_AS(FailureTypeCatalog({{"x", {1, "c", true, ""}}}), ValidationError);
  CHECK_THROWS_AS(FailureTypeCatalog({{"x", {1, "c", true, "(("}}}), ValidationError);
}

TEST_CASE("catalog file round-trips") {
  fixture::TempDir dir;
  const auto cat = sim::default_catalog();
  save_catalog(cat, dir / "catalog.json");
  CHECK(load_catalog(dir / "catalog.json") == cat);
  write_file(dir / "dup.json",
             R"({"failure_types":[{"id":"a","level":1,"device_class":"c"},{"id":"a","level":2,"device_class":"c"}]})");
  CHECK_THROWS_AS(load_catalog(dir / "dup.json"), ValidationError);
  write_file(dir / "broken.json", "{");
  CHECK_THROWS_AS(load_catalog(dir / "broken.json"), ParseError);
}

TEST_CASE("csv reader handles quoting, embedded newlines and CRLF") {
  const auto rows = csv::parse("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\n\"multi\nline\",z\n", "t.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].fields == std::vector<std::string>{"x,1", "he said \"hi\""});
  CHECK(rows[2].fields == std::vector<std::string>{"multi\nline", "z"});
  CHECK(rows[2].line == 3);
  CHECK_THROWS_AS(csv::parse("a,\"b\n", "t.csv"), ParseError);
  CHECK_THROWS_AS(csv::Table("x,y\n1,2\n", "t.csv", {"a", "b"}), ParseError);
  CHECK_THROWS_AS(csv::Table("a,b\n1\n", "t.csv", {"a", "b"}), ParseError);

  std::ostringstream out;
  csv::write_row(out, {"plain", "with,comma", "with\"quote"});
  CHECK(out.str() == "plain,\"with,comma\",\"with\"\"quote\"\r\n");
}

TEST_CASE("load_snapshot: bundle with no alerts and one outage incident") {
  fixture::TempDir dir;
  write_bundle(dir.path(), kAlertHeader, kIncidentHeader + kOutageIncident);
  const auto snap = load_snapshot(dir.path(), sim::default_catalog());
  CHECK(snap.alerts.empty());
  CHECK(snap.incidents.size() == 1);
  CHECK(snap.outage.sns == SnSet{"SRV-1", "SRV-2"});
  CHECK(snap.outage.end_time.minutes == 15);
}

TEST_CASE("load_snapshot: alert at -130 min is inside the alert window") {
  fixture::TempDir dir;
  write_bundle(dir.path(), kAlertHeader + "2024-03-01T09:50:00Z,TOR-1,Switch Reboot,reboot\n",
               kIncidentHeader + kOutageIncident);
  const auto snap = load_snapshot(dir.path(), sim::default_catalog());
  REQUIRE(snap.alerts.size() == 1);
  CHECK(snap.alerts[0].time.minutes == -130);
}

TEST_CASE("load_snapshot: incident starting at -200 min is rejected") {
  fixture::TempDir dir;
  write_bundle(dir.path(), kAlertHeader,
               kIncidentHeader + "2024-03-01T08:40:00Z,2024-03-01T09:00:00Z,TOR-1,Switch Reboot,x\n");
  CHECK_THROWS_AS(load_snapshot(dir.path(), sim::default_catalog()), ValidationError);
}

TEST_CASE("load_snapshot: unknown failure type is named in the error") {
  fixture::TempDir dir;
  write_bundle(dir.path(), kAlertHeader + "2024-03-01T11:50:00Z,TOR-1,Gremlins,x\n", kIncidentHeader);
  try {
    load_snapshot(dir.path(), sim::default_catalog());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("Gremlins") != std::string::npos);
  }
}

TEST_CASE("load_snapshot: malformed record names file, line and field") {
  fixture::TempDir dir;
  write_bundle(dir.path(), kAlertHeader + "2024-03-01T11:50:00Z,TOR-1,Switch Reboot,x\nyesterday,TOR-1,Switch Reboot,x\n",
               kIncidentHeader);
  try {
    load_snapshot(dir.path(), sim::default_catalog());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.where() == "alerts.csv:3 field 'time'");
  }
  write_bundle(dir.path(), kAlertHeader, kIncidentHeader,
               "time,device_sns,change_type,trigger,description\n2024-03-01T11:50:00Z,AGG-1,Firmware Upgrade,sometimes,x\n");
  CHECK_THROWS_AS(load_snapshot(dir.path(), sim::default_catalog()), ParseError);
}

TEST_CASE("load_snapshot: missing csv files read as empty tables") {
  fixture::TempDir dir;
  write_file(dir / "meta.json", std::string(R"({"outage_time":")") + kOutage + R"(","outage_sns":["S"]})");
  const auto snap = load_snapshot(dir.path(), sim::default_catalog());
  CHECK(snap.alerts.empty());
  CHECK(snap.changes.empty());
  CHECK(snap.outage_id == dir.path().filename().string());
}

TEST_CASE("snapshot round-trip: save then load gives an equal value") {
  const auto cmdb = sim::generate_topology({});
  const auto sc = sim::inject_scenario(cmdb, sim::default_scenario(), 11);
  fixture::TempDir dir;
  save_snapshot(sc.snapshot, dir.path());
  const auto back = load_snapshot(dir.path(), sim::default_catalog());
  CHECK(back.alerts == sc.snapshot.alerts);
  CHECK(back.incidents == sc.snapshot.incidents);
  CHECK(back.changes == sc.snapshot.changes);
  CHECK(back.outage.sns == sc.snapshot.outage.sns);
  CHECK(back.outage_time == sc.snapshot.outage_time);
  CHECK(back.windows == sc.snapshot.windows);
  fixture::TempDir again;
  save_snapshot(back, again.path());
  for (const auto* f : {"meta.json", "alerts.csv", "incidents.csv", "changes.csv"}) {
    CHECK(read_file(dir / f) == read_file(again / f));
  }
}

TEST_CASE("device lists split on semicolons") {
  CHECK(parse_sn_list("a; b;;c ") == SnSet{"a", "b", "c"});
  CHECK(join_sns({"b", "a"}) == "a;b");
}

TEST_CASE("event json round-trip") {
  const auto e = fixture::event({"a", "b"}, "Switch Reboot", "tor_switch", -12, -3, EventSource::incident);
  CHECK(event_from_json(event_to_json(e)) == e);
}

TEST_CASE("cmdb: edges, closure and json round-trip") {
  CmdbGraph g;
  g.add_device("UPS", "ups");
  g.add_device("PDU", "pdu");
  g.add_device("S1", "server");
  g.add_device("S2", "server");
  g.add_edge("UPS", "PDU");
  g.add_edge("PDU", "S1");
  g.add_edge("PDU", "S2");
  CHECK(g.out("PDU") == SnSet{"S1", "S2"});
  CHECK(g.in("S1") == SnSet{"PDU"});
  CHECK(g.downstream_closure("UPS") == SnSet{"PDU", "S1", "S2"});
  CHECK(g.devices_of_class("server") == std::vector<DeviceSn>{"S1", "S2"});
  CHECK(g.edge_count() == 3);
  CHECK_THROWS_AS(g.out("ghost"), CmdbLookupError);
  CHECK_THROWS_AS(g.add_edge("UPS", "ghost"), CmdbLookupError);
  CHECK_THROWS_AS(g.add_device("S1", "pdu"), ValidationError);
  CHECK(cmdb_from_json(cmdb_to_json(g)) == g);
  CHECK_THROWS_AS(cmdb_from_json("{\"devices\": 3}"), ParseError);
}
