#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bsodiag/cmdb.hpp"
#include "bsodiag/fcm.hpp"
#include "bsodiag/model.hpp"

namespace bsodiag::sim {

namespace cls {
inline constexpr const char* ups = "ups";
inline constexpr const char* pdu = "pdu";
inline constexpr const char* cooling = "cooling";
inline constexpr const char* core = "core_switch";
inline constexpr const char* agg = "agg_switch";
inline constexpr const char* tor = "tor_switch";
inline constexpr const char* lb = "load_balancer";
inline constexpr const char* server = "server";
}  // namespace cls

/// Racks are the unit of the layout: each rack holds one PDU, one ToR switch
/// and `servers_per_rack` servers.
struct TopologySpec {
  std::size_t ups = 2;
  std::size_t cooling = 2;
  std::size_t core_switches = 1;
  std::size_t agg_switches = 2;
  std::size_t load_balancers = 1;
  std::size_t racks = 6;
  std::size_t servers_per_rack = 8;
  bool dual_homed_tors = true;  // every ToR hangs off two aggregation switches
  std::string prefix;           // prepended to every device SN
  std::uint64_t seed = 1;
};

/// Power: ups -> pdu -> server. Cooling: cooling -> tor. Network:
/// core -> agg -> tor -> server and load_balancer -> agg.
CmdbGraph generate_topology(const TopologySpec& spec);

/// How a failure type shows up in monitoring data.
struct TypeProfile {
  FailureTypeId id;
  int level = 1;
  DeviceClass device_class;
  bool numeric = false;
  std::string pattern;
  std::string unit_format;  // printf format for the numeric value, e.g. "cpu_util=%.1f"
  bool alerts = false;
  bool incidents = false;
  bool change = false;      // emitted as a change record instead
  bool passive = false;     // change trigger
  double noise_lo = 1.0, noise_hi = 1.0;  // numeric values in background noise
  double fault_lo = 1.0, fault_hi = 1.0;  // numeric values while failing
  double noise_weight = 0.0;              // relative background false-positive volume
};

/// Failure taxonomy used by the generator.
const std::vector<TypeProfile>& taxonomy();
const TypeProfile& profile(std::string_view type);
FailureTypeCatalog default_catalog();

struct ChainStep {
  FailureTypeId type;
  DeviceClass device_class;
  std::size_t fanout = 1;  // devices drawn for this step (at most)
};

/// Ordered root-to-leaf failure chain; the outage is implied after the last step.
struct ChainSpec {
  std::string name;
  double weight = 1.0;
  std::vector<ChainStep> steps;
};

std::vector<ChainSpec> default_chains();

struct NoiseSpec {
  double fp_alert_rate = 0.0;       // background alerts per minute per active stream
  double stream_probability = 0.0;  // chance a (device, noise type) stream is active
  double flooding = 1.0;            // rate multiplier of flooded streams
  double flood_fraction = 0.0;      // share of active streams that are flooded
  double incident_omission = 0.0;
  double decoys = 0.0;              // mean number of unrelated failure bursts
  double neighbor_decoy_fraction = 0.0;  // share of decoys placed next to the chain
  double passive_changes = 0.0;     // mean number of passive changes
};

NoiseSpec zero_noise();
NoiseSpec default_noise();

struct HistorySpec {
  std::size_t days = 365;
  std::size_t data_centers = 3;
  double outage_probability = 0.3;  // chance a (day, DC) group contains a chain
  double step_omission = 0.05;      // chance a chain step goes unrecorded
  double noise_events = 2.0;        // mean unrelated events per group
  double cascades = 1.0;            // mean chains per group that stop short of an outage
};

struct ScenarioSpec {
  WindowParams windows;
  TopologySpec topology;
  std::vector<ChainSpec> chains;  // library; one is drawn per case
  NoiseSpec noise;
  HistorySpec history;
  std::int64_t delay_min = 1;
  std::int64_t delay_max = 10;
  std::int64_t duration_min = 10;  // failure persistence, minutes
  std::int64_t duration_max = 30;
  double fault_alert_rate = 3.0;   // alerts per minute per failing device
  std::size_t cases = 20;
};

ScenarioSpec default_scenario();
ScenarioSpec load_scenario_spec(const std::filesystem::path& path);

struct GroundTruth {
  std::string chain;                 // empty for noise-only cases
  std::optional<Event> root_cause;
  std::vector<Event> path;           // root ... outage; empty for noise-only cases
  std::vector<Event> injected;       // chain steps and decoys with true spans
};

struct Scenario {
  OutageSnapshot snapshot;
  GroundTruth truth;
};

/// Draws one chain from the library (weighted) and materialises it on `cmdb`.
Scenario inject_scenario(const CmdbGraph& cmdb, const ScenarioSpec& spec, std::uint64_t seed);

std::vector<TaggedEvent> generate_history(const CmdbGraph& cmdb, const ScenarioSpec& spec, std::uint64_t seed);

std::string truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(std::string_view text, std::string_view source_name = "truth.json");

/// Writes DIR/case_NNNN/{meta.json, alerts.csv, incidents.csv, changes.csv,
/// catalog.json, cmdb.json, truth.json} for every case plus DIR/history.jsonl.
void write_scenario_set(const ScenarioSpec& spec, std::uint64_t seed, const std::filesystem::path& dir);

/// Per-case seed derived from the batch seed.
std::uint64_t case_seed(std::uint64_t seed, std::size_t index);

}  // namespace bsodiag::sim
