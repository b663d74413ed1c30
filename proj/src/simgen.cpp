#include "bsodiag/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <json.hpp>
#include <toml.hpp>

#include "bsodiag/error.hpp"
#include "bsodiag/json_io.hpp"
#include "bsodiag/snapshot_io.hpp"

namespace bsodiag::sim {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}

  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(g_);
  }
  double real(double lo, double hi) { return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(g_); }
  bool chance(double p) { return p > 0.0 && (p >= 1.0 || std::bernoulli_distribution(p)(g_)); }
  std::int64_t poisson(double mean) {
    return mean > 0.0 ? std::poisson_distribution<std::int64_t>(mean)(g_) : 0;
  }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(v.size()) - 1))];
  }
  template <class T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), g_);
  }

 private:
  std::mt19937_64 g_;
};

std::string numbered(std::string_view prefix, std::string_view stem, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%s-%02zu", std::string(prefix).c_str(), std::string(stem).c_str(), i + 1);
  return buf;
}

}  // namespace

std::uint64_t case_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 over (seed, index)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CmdbGraph generate_topology(const TopologySpec& spec) {
  if (spec.racks == 0 || spec.servers_per_rack == 0) throw GenerationError("topology needs at least one rack and server");
  if (spec.ups > spec.racks) throw GenerationError("more UPS units than racks: some UPS would feed nothing");
  if (spec.cooling > spec.racks) throw GenerationError("more cooling units than racks: some would cool nothing");
  if (spec.agg_switches > spec.racks) throw GenerationError("more aggregation switches than racks");
  if ((spec.core_switches > 0 || spec.load_balancers > 0) && spec.agg_switches == 0) {
    throw GenerationError("core switches and load balancers need aggregation switches below them");
  }

  Rng rng(spec.seed);
  CmdbGraph g;
  const auto& p = spec.prefix;
  std::vector<std::string> pdus, tors;
  for (std::size_t r = 0; r < spec.racks; ++r) {
    char rack_buf[16];
    std::snprintf(rack_buf, sizeof rack_buf, "R%02zu", r + 1);
    const std::string rack = rack_buf;
    pdus.push_back(p + "PDU-" + rack);
    tors.push_back(p + "TOR-" + rack);
    g.add_device(pdus.back(), cls::pdu);
    g.add_device(tors.back(), cls::tor);
    for (std::size_t s = 0; s < spec.servers_per_rack; ++s) {
      const auto sn = numbered(p + "SRV-" + rack, "", s);
      g.add_device(sn, cls::server);
      g.add_edge(pdus.back(), sn);
      g.add_edge(tors.back(), sn);
    }
  }

  // Round-robin over a shuffled rack order, so every feeder gets a rack.
  auto feed = [&](std::size_t count, std::string_view stem, const char* cls_name,
                  const std::vector<std::string>& targets) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < count; ++i) {
      names.push_back(numbered(p, stem, i));
      g.add_device(names.back(), cls_name);
    }
    if (count == 0) return names;
    std::vector<std::size_t> order(targets.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t pos = 0; pos < order.size(); ++pos) g.add_edge(names[pos % count], targets[order[pos]]);
    return names;
  };
  feed(spec.ups, "UPS", cls::ups, pdus);
  feed(spec.cooling, "CRAC", cls::cooling, tors);

  std::vector<std::string> aggs;
  for (std::size_t i = 0; i < spec.agg_switches; ++i) {
    aggs.push_back(numbered(p, "AGG", i));
    g.add_device(aggs.back(), cls::agg);
  }
  if (!aggs.empty()) {
    std::vector<std::size_t> order(tors.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t primary = pos % aggs.size();
      g.add_edge(aggs[primary], tors[order[pos]]);
      if (spec.dual_homed_tors && aggs.size() > 1) {
        const auto offset = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(aggs.size()) - 1));
        g.add_edge(aggs[(primary + offset) % aggs.size()], tors[order[pos]]);
      }
    }
  }
  for (std::size_t i = 0; i < spec.core_switches; ++i) {
    const auto sn = numbered(p, "CORE", i);
    g.add_device(sn, cls::core);
    for (const auto& a : aggs) g.add_edge(sn, a);
  }
  for (std::size_t i = 0; i < spec.load_balancers; ++i) {
    const auto sn = numbered(p, "LB", i);
    g.add_device(sn, cls::lb);
    for (const auto& a : aggs) g.add_edge(sn, a);
  }
  return g;
}

const std::vector<TypeProfile>& taxonomy() {
  static const std::vector<TypeProfile> types = [] {
    std::vector<TypeProfile> t;
    auto add = [&t](TypeProfile p) { t.push_back(std::move(p)); };
    TypeProfile p;

    p = {};
    p.id = "UPS Power Outage", p.level = 6, p.device_class = cls::ups, p.alerts = true, p.incidents = true;
    add(p);
    p = {};
    p.id = "Refrigerant Replacing", p.level = 6, p.device_class = cls::cooling, p.change = true;
    add(p);
    p = {};
    p.id = "Core Link Failure", p.level = 6, p.device_class = cls::core, p.alerts = true, p.incidents = true;
    add(p);
    p = {};
    p.id = "Load Balancer Congestion", p.level = 6, p.device_class = cls::lb, p.alerts = true, p.numeric = true;
    p.pattern = "qdepth=([0-9]+(?:\\.[0-9]+)?)", p.unit_format = "qdepth=%.0f";
    p.noise_lo = 100, p.noise_hi = 400, p.fault_lo = 2000, p.fault_hi = 5000;
    add(p);
    p = {};
    p.id = "Firmware Upgrade", p.level = 5, p.device_class = cls::agg, p.change = true;
    add(p);
    p = {};
    p.id = "Switch Reboot", p.level = 5, p.device_class = cls::agg, p.alerts = true, p.incidents = true;
    add(p);
    p = {};
    p.id = "PSU Power Outage", p.level = 4, p.device_class = cls::pdu, p.alerts = true, p.incidents = true;
    add(p);
    p = {};
    p.id = "Switch Port Down", p.level = 4, p.device_class = cls::tor, p.alerts = true, p.incidents = true;
    add(p);
    p = {};
    p.id = "Partial Network Loss", p.level = 4, p.device_class = cls::tor, p.alerts = true, p.numeric = true;
    p.pattern = "loss=([0-9]+(?:\\.[0-9]+)?)%", p.unit_format = "loss=%.1f%%";
    p.noise_lo = 0.5, p.noise_hi = 5, p.fault_lo = 20, p.fault_hi = 80, p.noise_weight = 206;
    add(p);
    p = {};
    p.id = "Temperature Anomaly", p.level = 4, p.device_class = cls::tor, p.alerts = true, p.incidents = true;
    p.numeric = true, p.pattern = "temp=([0-9]+(?:\\.[0-9]+)?)C", p.unit_format = "temp=%.1fC";
    p.noise_lo = 30, p.noise_hi = 40, p.fault_lo = 60, p.fault_hi = 85, p.noise_weight = 126;
    add(p);
    p = {};
    p.id = "High CPU Utilization", p.level = 2, p.device_class = cls::server, p.alerts = true, p.numeric = true;
    p.pattern = "cpu_util=([0-9]+(?:\\.[0-9]+)?)", p.unit_format = "cpu_util=%.1f";
    p.noise_lo = 80, p.noise_hi = 95, p.fault_lo = 97, p.fault_hi = 100, p.noise_weight = 305;
    add(p);
    p = {};
    p.id = "VM Migration", p.level = 2, p.device_class = cls::server, p.change = true, p.passive = true;
    add(p);
    p = {};
    p.id = std::string(kDefaultOutageType), p.level = 1, p.device_class = cls::server, p.incidents = true;
    add(p);
    return t;
  }();
  return types;
}

const TypeProfile& profile(std::string_view type) {
  for (const auto& p : taxonomy()) {
    if (p.id == type) return p;
  }
  throw GenerationError("failure type '" + std::string(type) + "' is not in the generator taxonomy");
}

FailureTypeCatalog default_catalog() {
  std::map<FailureTypeId, FailureTypeInfo> entries;
  for (const auto& p : taxonomy()) entries[p.id] = FailureTypeInfo{p.level, p.device_class, p.numeric, p.pattern};
  return FailureTypeCatalog(std::move(entries));
}

std::vector<ChainSpec> default_chains() {
  // Network roots dominate, IDC roots make up the rest; roots sit at every
  // level of the rule tree, not only the top.
  return {
      {"core_link", 0.10,
       {{"Core Link Failure", cls::core, 1}, {"Switch Reboot", cls::agg, 1}, {"Partial Network Loss", cls::tor, 1}}},
      {"lb_congestion", 0.10,
       {{"Load Balancer Congestion", cls::lb, 1}, {"Switch Reboot", cls::agg, 1}, {"Switch Port Down", cls::tor, 2}}},
      {"firmware", 0.12, {{"Firmware Upgrade", cls::agg, 1}, {"Switch Port Down", cls::tor, 2}}},
      {"agg_reboot", 0.12, {{"Switch Reboot", cls::agg, 1}, {"Partial Network Loss", cls::tor, 2}}},
      {"tor_reboot", 0.14, {{"Switch Reboot", cls::tor, 1}}},
      {"port_down", 0.14, {{"Switch Port Down", cls::tor, 1}}},
      {"ups", 0.10, {{"UPS Power Outage", cls::ups, 1}, {"PSU Power Outage", cls::pdu, 2}}},
      {"psu", 0.08, {{"PSU Power Outage", cls::pdu, 1}}},
      {"cooling", 0.10, {{"Refrigerant Replacing", cls::cooling, 1}, {"Temperature Anomaly", cls::tor, 2}}},
  };
}

NoiseSpec zero_noise() { return NoiseSpec{}; }

NoiseSpec default_noise() {
  NoiseSpec n;
  n.fp_alert_rate = 4.0;
  n.stream_probability = 0.5;
  n.flooding = 20.0;
  n.flood_fraction = 0.1;
  n.incident_omission = 0.3;
  n.decoys = 12.0;
  n.neighbor_decoy_fraction = 0.0;
  n.passive_changes = 2.0;
  return n;
}

ScenarioSpec default_scenario() {
  ScenarioSpec s;
  s.chains = default_chains();
  s.noise = default_noise();
  return s;
}

namespace {

struct Materialized {
  std::vector<SnSet> step_devices;
  SnSet outage_servers;
};

std::optional<Materialized> try_materialize(const CmdbGraph& cmdb, const ChainSpec& chain, Rng& rng) {
  Materialized m;
  const auto roots = cmdb.devices_of_class(chain.steps.front().device_class);
  if (roots.empty()) return std::nullopt;
  std::vector<DeviceSn> candidates = roots;
  for (const auto& step : chain.steps) {
    if (candidates.empty()) return std::nullopt;
    rng.shuffle(candidates);
    const std::size_t take = std::min(std::max<std::size_t>(step.fanout, 1), candidates.size());
    m.step_devices.emplace_back(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take));
    SnSet next;
    for (const auto& sn : m.step_devices.back()) {
      for (const auto& o : cmdb.out(sn)) next.insert(o);
    }
    candidates.clear();
    if (&step != &chain.steps.back()) {
      const auto& want = (&step + 1)->device_class;
      for (const auto& sn : next) {
        if (cmdb.device_class(sn) == want) candidates.push_back(sn);
      }
    }
  }
  const auto& last = chain.steps.back();
  if (last.device_class == cls::server) {
    m.outage_servers = m.step_devices.back();
  } else {
    for (const auto& sn : m.step_devices.back()) {
      for (const auto& o : cmdb.out(sn)) {
        if (cmdb.device_class(o) == cls::server) m.outage_servers.insert(o);
      }
    }
  }
  if (m.outage_servers.empty()) return std::nullopt;
  return m;
}

Materialized materialize(const CmdbGraph& cmdb, const ChainSpec& chain, Rng& rng) {
  if (chain.steps.empty()) throw GenerationError("chain '" + chain.name + "' has no steps");
  for (int attempt = 0; attempt < 64; ++attempt) {
    if (auto m = try_materialize(cmdb, chain, rng)) return *m;
  }
  throw GenerationError("chain '" + chain.name + "' has a step with no reachable device in the topology");
}

const ChainSpec& pick_chain(const std::vector<ChainSpec>& chains, Rng& rng) {
  double total = 0.0;
  for (const auto& c : chains) total += std::max(c.weight, 0.0);
  if (total <= 0.0) return chains.front();
  double x = rng.real(0.0, total);
  for (const auto& c : chains) {
    x -= std::max(c.weight, 0.0);
    if (x < 0.0) return c;
  }
  return chains.back();
}

std::string describe(const TypeProfile& p, double value, const DeviceSn& sn) {
  if (!p.numeric) return p.id + " on " + sn;
  char buf[64];
  std::snprintf(buf, sizeof buf, p.unit_format.c_str(), value);
  return std::string(buf) + " on " + sn;
}

class SnapshotBuilder {
 public:
  SnapshotBuilder(const ScenarioSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {}

  /// Emits a failure of `type` on `devices` over [start, end]; returns its true event.
  Event failure(const TypeProfile& p, const SnSet& devices, std::int64_t start, std::int64_t end) {
    Event e{devices, p.id, p.device_class, TimeRef{start}, TimeRef{end}, EventSource::alert};
    if (p.change) {
      e.end_time = e.start_time;
      e.source = EventSource::change;
      snap.changes.push_back(Change{TimeRef{start}, devices, p.id,
                                    p.passive ? ChangeTrigger::passive : ChangeTrigger::proactive,
                                    p.id + " (scheduled)"});
      return e;
    }
    if (p.alerts) {
      for (const auto& sn : devices) {
        for (std::int64_t m = start; m <= end && m < spec_.windows.T_prime; ++m) {
          auto count = rng_.poisson(spec_.fault_alert_rate);
          if (m == start) count = std::max<std::int64_t>(count, 1);
          for (std::int64_t c = 0; c < count; ++c) {
            snap.alerts.push_back(Alert{TimeRef{m}, sn, p.id, describe(p, rng_.real(p.fault_lo, p.fault_hi), sn)});
          }
        }
      }
    }
    if (p.incidents && !rng_.chance(spec_.noise.incident_omission)) {
      snap.incidents.push_back(Incident{TimeRef{start}, TimeRef{end}, devices, p.id, p.id + " ticket"});
      if (!p.alerts) e.source = EventSource::incident;
    }
    return e;
  }

  void background(const CmdbGraph& cmdb) {
    const auto& n = spec_.noise;
    if (n.fp_alert_rate <= 0.0 || n.stream_probability <= 0.0) return;
    struct Stream {
      const TypeProfile* type;
      DeviceSn sn;
      double rate;
    };
    std::vector<Stream> streams;
    double weight_total = 0.0;
    for (const auto& p : taxonomy()) weight_total += p.noise_weight;
    for (const auto& p : taxonomy()) {
      if (p.noise_weight <= 0.0) continue;
      std::vector<Stream> of_type;
      for (const auto& sn : cmdb.devices_of_class(p.device_class)) {
        if (rng_.chance(n.stream_probability)) of_type.push_back({&p, sn, 0.0});
      }
      if (of_type.empty()) continue;
      const double per_stream = n.fp_alert_rate * p.noise_weight / weight_total / static_cast<double>(of_type.size());
      for (auto& s : of_type) {
        s.rate = per_stream * (rng_.chance(n.flood_fraction) ? n.flooding : 1.0);
        streams.push_back(s);
      }
    }
    // The initial window is drawn fresh; every later minute replays a random
    // minute of it, so the stream keeps the pattern it showed before.
    const auto& w = spec_.windows;
    for (const auto& s : streams) {
      std::vector<std::vector<double>> minutes;
      for (std::int64_t m = -w.L; m < -w.T; ++m) {
        std::vector<double> values(static_cast<std::size_t>(rng_.poisson(s.rate)));
        for (auto& v : values) v = rng_.real(s.type->noise_lo, s.type->noise_hi);
        minutes.push_back(std::move(values));
      }
      for (std::int64_t m = -w.L; m < w.T_prime; ++m) {
        const auto& values = m < -w.T ? minutes[static_cast<std::size_t>(m + w.L)] : rng_.pick(minutes);
        for (double v : values) snap.alerts.push_back(Alert{TimeRef{m}, s.sn, s.type->id, describe(*s.type, v, s.sn)});
      }
    }
  }

  void finish() {
    std::stable_sort(snap.alerts.begin(), snap.alerts.end(),
                     [](const Alert& a, const Alert& b) { return a.time < b.time; });
    std::stable_sort(snap.incidents.begin(), snap.incidents.end(),
                     [](const Incident& a, const Incident& b) { return a.start < b.start; });
    std::stable_sort(snap.changes.begin(), snap.changes.end(),
                     [](const Change& a, const Change& b) { return a.time < b.time; });
  }

  OutageSnapshot snap;

 private:
  const ScenarioSpec& spec_;
  Rng& rng_;
};

std::vector<std::int64_t> chain_starts(std::size_t steps, const ScenarioSpec& spec, Rng& rng, std::int64_t outage_at) {
  std::vector<std::int64_t> starts(steps);
  std::int64_t t = outage_at;
  for (std::size_t k = steps; k-- > 0;) {
    t -= rng.integer(spec.delay_min, spec.delay_max);
    starts[k] = t;
  }
  return starts;
}

void check_spec(const ScenarioSpec& spec) {
  spec.windows.validate();
  if (spec.delay_min < 0 || spec.delay_max < spec.delay_min) throw ConfigError("delays must satisfy 0 <= min <= max");
  if (spec.duration_min < 0 || spec.duration_max < spec.duration_min) {
    throw ConfigError("durations must satisfy 0 <= min <= max");
  }
  const auto& h = spec.history;
  if (h.noise_events < 0 || h.cascades < 0 || h.outage_probability < 0 || h.outage_probability > 1) {
    throw ConfigError("history rates must be non-negative and outage_probability at most 1");
  }
  for (const auto& c : spec.chains) {
    for (const auto& s : c.steps) {
      const auto& p = profile(s.type);
      if (p.id == kDefaultOutageType) throw ConfigError("chain '" + c.name + "' lists the outage as a step");
      if (p.passive) throw ConfigError("chain '" + c.name + "' uses passive change '" + p.id + "'");
    }
  }
}

}  // namespace

Scenario inject_scenario(const CmdbGraph& cmdb, const ScenarioSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  Rng rng(seed);
  SnapshotBuilder b(spec, rng);
  Scenario sc;
  const auto& w = spec.windows;
  b.snap.windows = w;
  b.snap.outage_time = SysSeconds{std::chrono::seconds{1709251200 + static_cast<std::int64_t>(seed % 8760) * 3600}};

  SnSet outage_servers;
  SnSet chain_devices;
  if (!spec.chains.empty()) {
    const auto& chain = pick_chain(spec.chains, rng);
    const auto m = materialize(cmdb, chain, rng);
    const auto starts = chain_starts(chain.steps.size(), spec, rng, 0);
    if (starts.front() < -w.T) throw GenerationError("chain '" + chain.name + "' does not fit the diagnosis window");
    sc.truth.chain = chain.name;
    for (std::size_t k = 0; k < chain.steps.size(); ++k) {
      const auto& p = profile(chain.steps[k].type);
      const auto end = std::min(starts[k] + rng.integer(spec.duration_min, spec.duration_max), w.T_prime);
      auto e = b.failure(p, m.step_devices[k], starts[k], end);
      e.type_device = chain.steps[k].device_class;
      sc.truth.path.push_back(e);
      sc.truth.injected.push_back(e);
      chain_devices.insert(m.step_devices[k].begin(), m.step_devices[k].end());
    }
    sc.truth.root_cause = sc.truth.path.front();
    outage_servers = m.outage_servers;
  } else {
    const auto tors = cmdb.devices_of_class(cls::tor);
    const auto& holder = tors.empty() ? cmdb.devices_of_class(cls::server) : tors;
    if (holder.empty()) throw GenerationError("topology has no servers to take down");
    const auto& sn = rng.pick(holder);
    if (tors.empty()) {
      outage_servers.insert(sn);
    } else {
      for (const auto& o : cmdb.out(sn)) outage_servers.insert(o);
    }
  }

  const Event outage{outage_servers, std::string(kDefaultOutageType), cls::server, TimeRef{0}, TimeRef{w.T_prime},
                     EventSource::incident};
  b.snap.outage = outage;
  b.snap.incidents.push_back(Incident{outage.start_time, outage.end_time, outage_servers, outage.type_failure,
                                      "batch servers offline"});
  if (!sc.truth.path.empty()) sc.truth.path.push_back(outage);

  // Decoys: unrelated failures, some of them on devices next to the chain.
  std::vector<DeviceSn> near;
  {
    SnSet around;
    for (const auto& sn : chain_devices) {
      for (const auto& i : cmdb.in(sn)) around.insert(i);
    }
    for (const auto& sn : outage_servers) {
      for (const auto& i : cmdb.in(sn)) around.insert(i);
    }
    for (const auto& sn : around) {
      if (!chain_devices.count(sn)) near.push_back(sn);
    }
  }
  std::vector<DeviceSn> anywhere;
  for (const auto& [sn, c] : cmdb.devices()) {
    if (!chain_devices.count(sn)) anywhere.push_back(sn);
  }
  const auto n_decoys = rng.poisson(spec.noise.decoys);
  for (std::int64_t i = 0; i < n_decoys && !anywhere.empty(); ++i) {
    const bool close = !near.empty() && rng.chance(spec.noise.neighbor_decoy_fraction);
    const auto& sn = close ? rng.pick(near) : rng.pick(anywhere);
    const auto device_class = *cmdb.device_class(sn);
    std::vector<const TypeProfile*> options;
    for (const auto& p : taxonomy()) {
      if (p.device_class == device_class && !p.passive && p.id != kDefaultOutageType) options.push_back(&p);
    }
    if (options.empty()) continue;
    const auto* p = rng.pick(options);
    const auto start = rng.integer(-w.T, -1);
    const auto end = std::min(start + rng.integer(3, 15), w.T_prime);
    auto e = b.failure(*p, SnSet{sn}, start, end);
    e.type_device = device_class;
    sc.truth.injected.push_back(e);
  }

  const auto n_passive = rng.poisson(spec.noise.passive_changes);
  const auto servers = cmdb.devices_of_class(cls::server);
  for (std::int64_t i = 0; i < n_passive && !servers.empty(); ++i) {
    b.snap.changes.push_back(Change{TimeRef{rng.integer(-w.T, w.T_prime)}, SnSet{rng.pick(servers)}, "VM Migration",
                                    ChangeTrigger::passive, "automatic VM migration"});
  }

  b.background(cmdb);
  b.finish();
  sc.snapshot = std::move(b.snap);
  return sc;
}

std::vector<TaggedEvent> generate_history(const CmdbGraph& cmdb, const ScenarioSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  std::vector<TaggedEvent> out;
  if (spec.chains.empty()) return out;
  const auto& h = spec.history;
  if (h.days == 0) throw ConfigError("history needs at least one day");
  Rng rng(seed);

  std::vector<const TypeProfile*> noise_types;
  for (const auto& p : taxonomy()) {
    if (p.id != kDefaultOutageType && !cmdb.devices_of_class(p.device_class).empty()) noise_types.push_back(&p);
  }
  const auto epoch = std::chrono::sys_days{std::chrono::year{2023} / 1 / 1};
  for (std::size_t d = 0; d < h.days; ++d) {
    const auto ymd = std::chrono::year_month_day{epoch + std::chrono::days{d}};
    char day[16];
    std::snprintf(day, sizeof day, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    for (std::size_t c = 0; c < h.data_centers; ++c) {
      const std::string dc = "DC" + std::to_string(c + 1);
      auto emit = [&](Event e) { out.push_back(TaggedEvent{day, dc, std::move(e)}); };
      auto cascade = [&](bool outage) {
        const auto& chain = pick_chain(spec.chains, rng);
        const auto m = materialize(cmdb, chain, rng);
        const auto outage_at = rng.integer(180, 1380);
        const auto starts = chain_starts(chain.steps.size(), spec, rng, outage_at);
        for (std::size_t k = 0; k < chain.steps.size(); ++k) {
          if (rng.chance(h.step_omission)) continue;
          const auto& p = profile(chain.steps[k].type);
          const auto end = starts[k] + rng.integer(spec.duration_min, spec.duration_max);
          emit(Event{m.step_devices[k], p.id, chain.steps[k].device_class, TimeRef{starts[k]}, TimeRef{end},
                     p.change ? EventSource::change : EventSource::alert});
        }
        if (outage) {
          emit(Event{m.outage_servers, std::string(kDefaultOutageType), cls::server, TimeRef{outage_at},
                     TimeRef{outage_at + 15}, EventSource::incident});
        }
      };
      if (rng.chance(h.outage_probability)) cascade(true);
      for (auto n = rng.poisson(h.cascades); n > 0; --n) cascade(false);
      const auto n_noise = rng.poisson(h.noise_events);
      for (std::int64_t i = 0; i < n_noise && !noise_types.empty(); ++i) {
        const auto* p = rng.pick(noise_types);
        const auto sn = rng.pick(cmdb.devices_of_class(p->device_class));
        const auto start = rng.integer(0, 1400);
        emit(Event{SnSet{sn}, p->id, p->device_class, TimeRef{start}, TimeRef{start + rng.integer(1, 30)},
                   p->change ? EventSource::change : EventSource::alert});
      }
    }
  }
  return out;
}

std::string truth_to_json(const GroundTruth& truth) {
  json j;
  j["chain"] = truth.chain;
  j["root_cause"] = truth.root_cause ? event_to_json(*truth.root_cause) : json(nullptr);
  j["path"] = json::array();
  for (const auto& e : truth.path) j["path"].push_back(event_to_json(e));
  j["injected"] = json::array();
  for (const auto& e : truth.injected) j["injected"].push_back(event_to_json(e));
  return j.dump(2) + "\n";
}

GroundTruth truth_from_json(std::string_view text, std::string_view source_name) {
  try {
    const auto j = json::parse(text);
    GroundTruth t;
    t.chain = j.value("chain", std::string{});
    if (j.contains("root_cause") && !j["root_cause"].is_null()) t.root_cause = event_from_json(j["root_cause"]);
    for (const auto& e : j.at("path")) t.path.push_back(event_from_json(e));
    if (j.contains("injected")) {
      for (const auto& e : j["injected"]) t.injected.push_back(event_from_json(e));
    }
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string(source_name), e.what());
  }
}

namespace {

template <class T>
T get_or(const toml::table& t, std::string_view key, T fallback) {
  if (auto v = t[key].value<T>()) return *v;
  return fallback;
}

std::size_t get_count(const toml::table& t, std::string_view key, std::size_t fallback) {
  if (auto v = t[key].value<std::int64_t>()) {
    if (*v < 0) throw ConfigError("'" + std::string(key) + "' must be non-negative");
    return static_cast<std::size_t>(*v);
  }
  return fallback;
}

}  // namespace

ScenarioSpec load_scenario_spec(const fs::path& path) {
  toml::table root;
  try {
    root = toml::parse(read_file(path), path.string());
  } catch (const toml::parse_error& e) {
    throw ParseError(path.string() + ":" + std::to_string(e.source().begin.line), std::string(e.description()));
  }
  ScenarioSpec s = default_scenario();
  s.cases = get_count(root, "cases", s.cases);
  s.delay_min = get_or<std::int64_t>(root, "delay_min", s.delay_min);
  s.delay_max = get_or<std::int64_t>(root, "delay_max", s.delay_max);
  s.duration_min = get_or<std::int64_t>(root, "duration_min", s.duration_min);
  s.duration_max = get_or<std::int64_t>(root, "duration_max", s.duration_max);
  s.fault_alert_rate = get_or<double>(root, "fault_alert_rate", s.fault_alert_rate);

  if (auto* w = root["windows"].as_table()) {
    s.windows.L = get_or<std::int64_t>(*w, "L", s.windows.L);
    s.windows.T = get_or<std::int64_t>(*w, "T", s.windows.T);
    s.windows.T_prime = get_or<std::int64_t>(*w, "T_prime", s.windows.T_prime);
  }
  if (auto* t = root["topology"].as_table()) {
    auto& tp = s.topology;
    tp.ups = get_count(*t, "ups", tp.ups);
    tp.cooling = get_count(*t, "cooling", tp.cooling);
    tp.core_switches = get_count(*t, "core_switches", tp.core_switches);
    tp.agg_switches = get_count(*t, "agg_switches", tp.agg_switches);
    tp.load_balancers = get_count(*t, "load_balancers", tp.load_balancers);
    tp.racks = get_count(*t, "racks", tp.racks);
    tp.servers_per_rack = get_count(*t, "servers_per_rack", tp.servers_per_rack);
    tp.dual_homed_tors = get_or<bool>(*t, "dual_homed_tors", tp.dual_homed_tors);
    tp.prefix = get_or<std::string>(*t, "prefix", tp.prefix);
  }
  if (auto* n = root["noise"].as_table()) {
    if (get_or<bool>(*n, "none", false)) s.noise = zero_noise();
    auto& ns = s.noise;
    ns.fp_alert_rate = get_or<double>(*n, "fp_alert_rate", ns.fp_alert_rate);
    ns.stream_probability = get_or<double>(*n, "stream_probability", ns.stream_probability);
    ns.flooding = get_or<double>(*n, "flooding", ns.flooding);
    ns.flood_fraction = get_or<double>(*n, "flood_fraction", ns.flood_fraction);
    ns.incident_omission = get_or<double>(*n, "incident_omission", ns.incident_omission);
    ns.decoys = get_or<double>(*n, "decoys", ns.decoys);
    ns.neighbor_decoy_fraction = get_or<double>(*n, "neighbor_decoy_fraction", ns.neighbor_decoy_fraction);
    ns.passive_changes = get_or<double>(*n, "passive_changes", ns.passive_changes);
  }
  if (auto* h = root["history"].as_table()) {
    auto& hs = s.history;
    hs.days = get_count(*h, "days", hs.days);
    hs.data_centers = get_count(*h, "data_centers", hs.data_centers);
    hs.outage_probability = get_or<double>(*h, "outage_probability", hs.outage_probability);
    hs.step_omission = get_or<double>(*h, "step_omission", hs.step_omission);
    hs.noise_events = get_or<double>(*h, "noise_events", hs.noise_events);
    hs.cascades = get_or<double>(*h, "cascades", hs.cascades);
  }
  if (get_or<bool>(root, "noise_only", false)) s.chains.clear();
  if (auto* chains = root["chain"].as_array()) {
    s.chains.clear();
    for (const auto& node : *chains) {
      const auto* ct = node.as_table();
      if (!ct) throw ConfigError("[[chain]] entries must be tables");
      ChainSpec c;
      c.name = get_or<std::string>(*ct, "name", "chain" + std::to_string(s.chains.size() + 1));
      c.weight = get_or<double>(*ct, "weight", 1.0);
      if (const auto* steps = (*ct)["step"].as_array()) {
        for (const auto& sn : *steps) {
          const auto* st = sn.as_table();
          if (!st) throw ConfigError("[[chain.step]] entries must be tables");
          ChainStep step;
          step.type = get_or<std::string>(*st, "type", "");
          step.device_class = get_or<std::string>(*st, "device_class", "");
          if (step.type.empty()) throw ConfigError("chain '" + c.name + "' has a step without a type");
          if (step.device_class.empty()) step.device_class = profile(step.type).device_class;
          step.fanout = get_count(*st, "fanout", 1);
          c.steps.push_back(std::move(step));
        }
      }
      if (c.steps.empty()) throw ConfigError("chain '" + c.name + "' has no steps");
      s.chains.push_back(std::move(c));
    }
  }
  check_spec(s);
  return s;
}

void write_scenario_set(const ScenarioSpec& spec, std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  const auto catalog = default_catalog();
  for (std::size_t i = 0; i < spec.cases; ++i) {
    auto topo = spec.topology;
    topo.seed = case_seed(seed, i);
    const auto cmdb = generate_topology(topo);
    auto sc = inject_scenario(cmdb, spec, case_seed(topo.seed, 0));
    char name[32];
    std::snprintf(name, sizeof name, "case_%04zu", i + 1);
    sc.snapshot.outage_id = name;
    const auto case_dir = dir / name;
    save_snapshot(sc.snapshot, case_dir);
    save_catalog(catalog, case_dir / "catalog.json");
    save_cmdb(cmdb, case_dir / "cmdb.json");
    write_file(case_dir / "truth.json", truth_to_json(sc.truth));
  }
  auto topo = spec.topology;
  topo.seed = case_seed(seed, 1u << 20);
  const auto history = generate_history(generate_topology(topo), spec, case_seed(seed, (1u << 20) + 1));
  save_history(history, dir / "history.jsonl");
}

}  // namespace bsodiag::sim
