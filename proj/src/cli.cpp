#include "bsodiag/cli.hpp"

#include <chrono>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsodiag/cmdb.hpp"
#include "bsodiag/config.hpp"
#include "bsodiag/error.hpp"
#include "bsodiag/eval.hpp"
#include "bsodiag/fcm.hpp"
#include "bsodiag/json_io.hpp"
#include "bsodiag/log.hpp"
#include "bsodiag/orca.hpp"
#include "bsodiag/simgen.hpp"
#include "bsodiag/snapshot_io.hpp"

namespace bsodiag {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Flags shared by every subcommand that override config-file values.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> log_level;
  std::optional<std::int64_t> delta, eta;
  std::optional<double> spot_q, spot_init_quantile, alpha, damping, tol;
  std::optional<std::string> whitelist, support_mode, pcr_denominator;
  std::optional<std::size_t> k, walk_iterations, max_path_len;
  bool permissive = false;
  bool intensity_fallback = false;

  void apply(PipelineConfig& c) const {
    if (delta) c.delta_minutes = *delta;
    if (eta) c.eta_minutes = *eta;
    if (spot_q) c.spot_q = *spot_q;
    if (spot_init_quantile) c.spot_init_quantile = *spot_init_quantile;
    if (alpha) c.alpha = *alpha;
    if (damping) c.damping = *damping;
    if (tol) c.tol = *tol;
    if (whitelist) c.whitelist_path = *whitelist;
    if (support_mode) c.support_mode = parse_support_mode(*support_mode);
    if (pcr_denominator) c.pcr_denominator = eval::parse_pcr_denominator(*pcr_denominator);
    if (k) c.k = *k;
    if (walk_iterations) c.walk_iterations = *walk_iterations;
    if (max_path_len) c.max_path_len = *max_path_len;
    if (permissive) c.catalog_mode = CatalogMode::permissive;
    if (intensity_fallback) c.intensity_fallback = true;
  }
};

void add_common(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config_path, "TOML config file (default: $BSODIAG_CONFIG or ./bsodiag.toml)");
  cmd.add_option("--log-level", o.log_level, "debug, info, warn, error or off");
}

void add_pipeline(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--delta", o.delta, "alert slot length in minutes");
  cmd.add_option("--eta", o.eta, "event merge window in minutes");
  cmd.add_option("--spot-q", o.spot_q, "SPOT risk level");
  cmd.add_option("--spot-init-quantile", o.spot_init_quantile, "SPOT initial threshold quantile");
  cmd.add_option("--whitelist", o.whitelist, "change whitelist JSON");
  cmd.add_option("--damping", o.damping, "random-walk damping");
  cmd.add_option("--walk-iterations", o.walk_iterations, "random-walk iterations (L)");
  cmd.add_option("--tol", o.tol, "random-walk convergence tolerance");
  cmd.add_option("-k", o.k, "number of root-cause candidates");
  cmd.add_option("--max-path-len", o.max_path_len, "longest propagation path, in nodes");
  cmd.add_flag("--permissive", o.permissive, "admit failure types missing from the catalog");
  cmd.add_flag("--intensity-fallback", o.intensity_fallback, "use intensity 1 when a numeric alert has no value");
}

PipelineConfig effective_config(const Overrides& o) {
  PipelineConfig c;
  if (auto path = locate_config(o.config_path)) {
    if (!fs::exists(*path)) throw ConfigError("config file " + path->string() + " does not exist");
    apply_config_file(c, *path);
  }
  o.apply(c);
  c.validate();
  return c;
}

void set_log_level(const std::optional<std::string>& level) {
  if (!level) return;
  static const std::map<std::string, log::Level> levels{{"debug", log::Level::debug},
                                                        {"info", log::Level::info},
                                                        {"warn", log::Level::warn},
                                                        {"error", log::Level::error},
                                                        {"off", log::Level::off}};
  auto it = levels.find(*level);
  if (it == levels.end()) throw ConfigError("unknown log level '" + *level + "'");
  log::set_level(it->second);
}

std::string now_iso() {
  return format_iso8601(std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()));
}

json diagnosis_to_json(const DiagnosisResult& r, const PipelineConfig& c, const std::string& outage_id) {
  json j;
  j["outage_id"] = outage_id;
  j["status"] = to_string(r.status);
  j["events"] = json::array();
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    auto ej = event_to_json(r.events[i]);
    ej["id"] = "E" + std::to_string(i + 1);
    j["events"].push_back(ej);
  }
  j["outage"] = event_to_json(r.outage);
  j["ranked"] = json::array();
  for (const auto& re : r.ranked) {
    j["ranked"].push_back({{"id", re.id}, {"type_failure", re.event.type_failure}, {"score", re.score}});
  }
  j["top_k"] = json::array();
  for (const auto& re : r.top_k) j["top_k"].push_back(re.id);
  j["path_status"] = to_string(r.path_status);
  j["path"] = r.path;
  j["path_types"] = r.path_types;
  j["path_score"] = r.path_score;
  j["runtime_seconds"] = {{"failure_analysis", r.timing.failure_analysis_seconds},
                          {"localization", r.timing.localization_seconds}};
  j["provenance"] = {{"config_hash", c.hash()}, {"fkg_id", r.fkg_id}};
  j["config"] = c.to_json();
  return j;
}

FailureKnowledgeGraph mine_history(const fs::path& history_path, const FailureTypeCatalog& catalog,
                                   const PipelineConfig& c, const std::string& mined_at) {
  const auto history = load_history(history_path);
  const auto groups = group_events(history);
  const auto q1 = mine_frequent_failures(groups, c.alpha, c.support_mode);
  auto pairs = mine_failure_pairs(q1, groups, c.alpha, catalog, c.support_mode);
  return build_fkg(std::move(pairs), FkgProvenance{mined_at, c.alpha, groups.size(), history.size(), c.support_mode});
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Batch-servers-outage diagnosis: detection, correlation mining, root-cause localisation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bsodiag 0.1.0");

  Overrides o;

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate synthetic outage scenarios and history");
  std::optional<std::string> spec_path;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::optional<std::size_t> cases;
  sim_cmd->add_option("--spec", spec_path, "scenario.toml (default: built-in library and noise)");
  sim_cmd->add_option("--seed", seed, "random seed")->required();
  sim_cmd->add_option("--out", out_dir, "output directory")->required();
  sim_cmd->add_option("--cases", cases, "number of outage cases (overrides the spec)");
  add_common(*sim_cmd, o);

  // mine
  auto* mine_cmd = app.add_subcommand("mine", "mine the failure knowledge graph from history");
  std::string history_path, fkg_out;
  std::optional<std::string> catalog_path, mined_at;
  mine_cmd->add_option("--history", history_path, "history.jsonl")->required();
  mine_cmd->add_option("--out", fkg_out, "output fkg.json")->required();
  mine_cmd->add_option("--alpha", o.alpha, "support threshold");
  mine_cmd->add_option("--support-mode", o.support_mode, "groups or literal");
  mine_cmd->add_option("--catalog", catalog_path, "catalog.json with rule-tree levels (default: built-in)");
  mine_cmd->add_option("--mined-at", mined_at, "timestamp recorded in provenance (default: now)");
  add_common(*mine_cmd, o);

  // diagnose
  auto* diag_cmd = app.add_subcommand("diagnose", "locate the root cause and propagation path of one outage");
  std::string snapshot_dir, fkg_path, cmdb_path;
  std::optional<std::string> diag_out, events_out;
  diag_cmd->add_option("--snapshot", snapshot_dir, "snapshot bundle directory")->required();
  diag_cmd->add_option("--fkg", fkg_path, "fkg.json")->required();
  diag_cmd->add_option("--cmdb", cmdb_path, "cmdb.json")->required();
  diag_cmd->add_option("--catalog", catalog_path, "catalog.json (default: SNAPSHOT/catalog.json)");
  diag_cmd->add_option("--out", diag_out, "diagnosis report (default: SNAPSHOT/diagnosis.json)");
  diag_cmd->add_option("--events-out", events_out, "detected events (default: SNAPSHOT/events.json)");
  add_common(*diag_cmd, o);
  add_pipeline(*diag_cmd, o);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score methods over a directory of generated cases");
  std::string scenarios_dir, report_out;
  std::string methods_arg = "bsodiag,time_first,hierarchy_first,random";
  std::optional<std::string> eval_fkg, csv_out;
  eval_cmd->add_option("--scenarios", scenarios_dir, "directory of case_* bundles")->required();
  eval_cmd->add_option("--methods", methods_arg, "comma-separated methods");
  eval_cmd->add_option("--out", report_out, "report.json")->required();
  eval_cmd->add_option("--fkg", eval_fkg, "fkg.json (default: SCENARIOS/fkg.json, else mined from history)");
  eval_cmd->add_option("--csv", csv_out, "optional per-method metrics CSV");
  eval_cmd->add_option("--alpha", o.alpha, "support threshold when mining");
  eval_cmd->add_option("--pcr-denominator", o.pcr_denominator, "predicted or truth");
  eval_cmd->add_option("--seed", seed, "seed of the random baseline");
  add_common(*eval_cmd, o);
  add_pipeline(*eval_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    set_log_level(o.log_level);
    const auto config = effective_config(o);

    if (sim_cmd->parsed()) {
      auto spec = spec_path ? sim::load_scenario_spec(*spec_path) : sim::default_scenario();
      if (cases) spec.cases = *cases;
      spec.windows = config.windows;
      sim::write_scenario_set(spec, seed, out_dir);
      json echo{{"seed", seed}, {"cases", spec.cases}, {"spec", spec_path.value_or("")}, {"config", config.to_json()}};
      write_file(fs::path(out_dir) / "simulate.json", echo.dump(2) + "\n");
      log::info("wrote " + std::to_string(spec.cases) + " cases to " + out_dir);
      return kExitOk;
    }

    if (mine_cmd->parsed()) {
      const auto catalog = catalog_path ? load_catalog(*catalog_path, config.catalog_mode) : sim::default_catalog();
      const auto fkg = mine_history(history_path, catalog, config, mined_at.value_or(now_iso()));
      save_fkg(fkg, fkg_out);
      log::info("mined " + std::to_string(fkg.edges().size()) + " failure pairs into " + fkg_out);
      return kExitOk;
    }

    if (diag_cmd->parsed()) {
      const fs::path snap_dir(snapshot_dir);
      const auto catalog =
          load_catalog(catalog_path ? fs::path(*catalog_path) : snap_dir / "catalog.json", config.catalog_mode);
      const auto cmdb = load_cmdb(cmdb_path);
      const auto fkg = load_fkg(fkg_path);
      const auto snapshot = load_snapshot(snap_dir, catalog);
      const auto result = diagnose(snapshot, catalog, fkg, cmdb, config.mfd(), config.orca());

      json events = json::array();
      for (const auto& e : result.events) events.push_back(event_to_json(e));
      write_file(events_out ? fs::path(*events_out) : snap_dir / "events.json",
                 json{{"events", events}, {"outage", event_to_json(result.outage)}, {"config", config.to_json()}}
                         .dump(2) +
                     "\n");
      const auto report = diagnosis_to_json(result, config, snapshot.outage_id);
      write_file(diag_out ? fs::path(*diag_out) : snap_dir / "diagnosis.json", report.dump(2) + "\n");
      std::cout << "status: " << to_string(result.status) << "\n";
      if (!result.top_k.empty()) {
        std::cout << "root cause: " << result.top_k.front().id << " " << result.top_k.front().event.type_failure
                  << "\n";
        std::cout << "path: ";
        for (std::size_t i = 0; i < result.path_types.size(); ++i) {
          std::cout << (i ? " -> " : "") << result.path_types[i];
        }
        std::cout << (result.path_types.empty() ? "(none)" : "") << "\n";
      }
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const fs::path dir(scenarios_dir);
      std::vector<std::string> methods;
      std::stringstream ss(methods_arg);
      for (std::string m; std::getline(ss, m, ',');) {
        if (!m.empty()) methods.push_back(m);
      }
      if (methods.empty()) throw ConfigError("no methods given");
      FailureKnowledgeGraph fkg;
      if (eval_fkg) {
        fkg = load_fkg(*eval_fkg);
      } else if (fs::exists(dir / "fkg.json")) {
        fkg = load_fkg(dir / "fkg.json");
      } else if (fs::exists(dir / "history.jsonl")) {
        const auto catalog =
            fs::exists(dir / "catalog.json") ? load_catalog(dir / "catalog.json") : sim::default_catalog();
        fkg = mine_history(dir / "history.jsonl", catalog, config, now_iso());
      } else {
        log::warn("no fkg.json or history.jsonl; evaluating with an empty knowledge graph");
      }
      eval::BenchmarkConfig bc;
      bc.mfd = config.mfd();
      bc.orca = config.orca();
      bc.pcr_denominator = config.pcr_denominator;
      bc.seed = seed;
      const auto report = eval::run_benchmark(dir, methods, fkg, bc);
      auto j = json::parse(eval::report_to_json(report, config.k));
      j["config"] = config.to_json();
      j["provenance"] = {{"config_hash", config.hash()}, {"fkg_id", fkg.id()}, {"seed", seed}};
      write_file(report_out, j.dump(2) + "\n");
      std::cout << eval::report_table(report, config.k);
      if (csv_out) {
        std::ostringstream csv;
        csv << "method";
        for (std::size_t i = 1; i <= config.k; ++i) csv << ",PR@" << i;
        csv << ",MAP,PCR\r\n";
        for (const auto& m : report.methods) {
          const auto& mm = report.metrics.at(m);
          csv << m;
          for (std::size_t i = 1; i <= config.k; ++i) csv << "," << (mm.pr.count(i) ? mm.pr.at(i) : 0.0);
          csv << "," << mm.map << "," << mm.pcr << "\r\n";
        }
        write_file(*csv_out, csv.str());
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    log::error(e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    log::error(e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace bsodiag
