#include "bsodiag/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bsodiag/error.hpp"
#include "bsodiag/json_io.hpp"
#include "bsodiag/log.hpp"
#include "bsodiag/simgen.hpp"
#include "bsodiag/snapshot_io.hpp"

namespace bsodiag::eval {

namespace fs = std::filesystem;
using json = nlohmann::json;

bool root_cause_match(const Event& predicted, const Event& truth) {
  if (predicted.type_failure != truth.type_failure) return false;
  return std::any_of(predicted.sns.begin(), predicted.sns.end(), [&](const auto& sn) { return truth.sns.count(sn); });
}

double pr_at_k(std::span<const RankCase> cases, std::size_t k) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (cases.empty()) throw UndefinedMetricError("PR@k is undefined on an empty case list");
  std::size_t hits = 0;
  for (const auto& c : cases) {
    const auto n = std::min(k, c.ranked.size());
    if (std::any_of(c.ranked.begin(), c.ranked.begin() + static_cast<std::ptrdiff_t>(n),
                    [&](const Event& e) { return root_cause_match(e, c.truth); })) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(cases.size());
}

double map_k(std::span<const RankCase> cases, std::size_t k) {
  if (k < 1) throw ConfigError("k must be at least 1");
  double sum = 0.0;
  for (std::size_t i = 1; i <= k; ++i) sum += pr_at_k(cases, i);
  return sum / static_cast<double>(k);
}

std::string_view to_string(PcrDenominator d) { return d == PcrDenominator::predicted ? "predicted" : "truth"; }

PcrDenominator parse_pcr_denominator(std::string_view text) {
  if (text == "predicted") return PcrDenominator::predicted;
  if (text == "truth") return PcrDenominator::truth;
  throw ConfigError("unknown PCR denominator '" + std::string(text) + "' (expected predicted or truth)");
}

std::size_t longest_common_subpath(std::span<const FailureTypeId> a, std::span<const FailureTypeId> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

double pcr_case(const PathCase& c, PcrDenominator denominator) {
  const auto& denom_path = denominator == PcrDenominator::predicted ? c.predicted : c.truth;
  if (c.predicted.empty() || denom_path.empty()) return 0.0;
  return static_cast<double>(longest_common_subpath(c.predicted, c.truth)) /
         static_cast<double>(denom_path.size());
}

double pcr(std::span<const PathCase> cases, PcrDenominator denominator) {
  if (cases.empty()) throw UndefinedMetricError("PCR is undefined on an empty case list");
  double sum = 0.0;
  for (const auto& c : cases) sum += pcr_case(c, denominator);
  return sum / static_cast<double>(cases.size());
}

namespace {

std::vector<Event> head(std::vector<Event> v, std::size_t k) {
  if (v.size() > k) v.resize(k);
  return v;
}

}  // namespace

std::vector<Event> baseline_random(std::span<const Event> events, std::size_t k, std::uint64_t seed) {
  std::vector<Event> v(events.begin(), events.end());
  std::sort(v.begin(), v.end(), event_order);
  std::mt19937_64 rng(seed);
  std::shuffle(v.begin(), v.end(), rng);
  return head(std::move(v), k);
}

std::vector<Event> baseline_time_first(std::span<const Event> events, std::size_t k) {
  std::vector<Event> v(events.begin(), events.end());
  std::sort(v.begin(), v.end(), event_order);
  return head(std::move(v), k);
}

std::vector<Event> baseline_hierarchy_first(std::span<const Event> events, std::size_t k,
                                            const FailureTypeCatalog& rule_tree) {
  std::vector<Event> v(events.begin(), events.end());
  std::sort(v.begin(), v.end(), [&](const Event& a, const Event& b) {
    const int la = rule_tree.level(a.type_failure);
    const int lb = rule_tree.level(b.type_failure);
    if (la != lb) return la > lb;
    return event_order(a, b);
  });
  return head(std::move(v), k);
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"bsodiag", "bsodiag_no_fkg", "bsodiag_no_cmdb",
                                          "random",  "time_first",     "hierarchy_first"};
  return m;
}

namespace {

fs::path case_or_root(const fs::path& case_dir, const fs::path& root, const char* name) {
  if (fs::exists(case_dir / name)) return case_dir / name;
  if (fs::exists(root / name)) return root / name;
  throw ValidationError("no " + std::string(name) + " in " + case_dir.string() + " or " + root.string());
}

}  // namespace

EvalReport run_benchmark(const fs::path& dir, const std::vector<std::string>& methods,
                         const FailureKnowledgeGraph& fkg, const BenchmarkConfig& config) {
  using clock = std::chrono::steady_clock;
  for (const auto& m : methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }
  if (!fs::is_directory(dir)) throw ValidationError("scenario directory " + dir.string() + " does not exist");
  std::vector<fs::path> case_dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) case_dirs.push_back(entry.path());
  }
  std::sort(case_dirs.begin(), case_dirs.end());
  if (case_dirs.empty()) throw ValidationError("no outage cases under " + dir.string());

  EvalReport report;
  report.methods = methods;
  report.fkg_id = fkg.id();
  const std::size_t k = config.orca.k;
  std::map<std::string, std::vector<RankCase>> ranks;
  std::map<std::string, std::vector<PathCase>> paths;

  for (std::size_t idx = 0; idx < case_dirs.size(); ++idx) {
    const auto& cd = case_dirs[idx];
    const auto truth_path = cd / "truth.json";
    if (!fs::exists(truth_path)) {
      log::warn("skipping " + cd.string() + ": no truth.json");
      ++report.skipped_cases;
      continue;
    }
    sim::GroundTruth truth;
    try {
      truth = sim::truth_from_json(read_file(truth_path), truth_path.string());
    } catch (const ParseError& e) {
      log::warn("skipping " + cd.string() + ": " + e.what());
      ++report.skipped_cases;
      continue;
    }
    const auto catalog = load_catalog(case_or_root(cd, dir, "catalog.json"));
    const auto cmdb = load_cmdb(case_or_root(cd, dir, "cmdb.json"));
    const auto snapshot = load_snapshot(cd, catalog);

    CaseRecord rec;
    rec.id = cd.filename().string();
    rec.truth_root = truth.root_cause;
    for (const auto& e : truth.path) rec.truth_path.push_back(e.type_failure);

    const auto t0 = clock::now();
    const auto mfd = run_mfd(snapshot, catalog, config.mfd, cmdb_resolver(cmdb));
    rec.failure_analysis_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    report.failure_analysis_seconds += rec.failure_analysis_seconds;
    rec.events = mfd.events.size();

    for (const auto& m : methods) {
      MethodOutcome out;
      const auto t1 = clock::now();
      if (m.rfind("bsodiag", 0) == 0) {
        auto oc = config.orca;
        if (m == "bsodiag_no_fkg") oc.ecg.use_fkg = false;
        if (m == "bsodiag_no_cmdb") oc.ecg.use_cmdb = false;
        const auto r = localize(mfd.events, mfd.outage, fkg, cmdb, oc);
        for (const auto& re : r.top_k) out.top_k.push_back(re.event);
        out.path = r.path_types;
      } else if (m == "random") {
        out.top_k = baseline_random(mfd.events, k, config.seed + idx);
      } else if (m == "time_first") {
        out.top_k = baseline_time_first(mfd.events, k);
      } else {
        out.top_k = baseline_hierarchy_first(mfd.events, k, catalog);
      }
      report.metrics[m].localization_seconds += std::chrono::duration<double>(clock::now() - t1).count();
      if (truth.root_cause) {
        ranks[m].push_back(RankCase{out.top_k, *truth.root_cause});
        paths[m].push_back(PathCase{out.path, rec.truth_path});
      }
      rec.methods[m] = std::move(out);
    }
    if (truth.root_cause) ++report.scored_cases;
    report.cases.push_back(std::move(rec));
  }

  for (const auto& m : methods) {
    auto& mm = report.metrics[m];
    if (ranks[m].empty()) continue;
    for (std::size_t i = 1; i <= k; ++i) mm.pr[i] = pr_at_k(ranks[m], i);
    mm.map = map_k(ranks[m], k);
    mm.pcr = pcr(paths[m], config.pcr_denominator);
  }
  return report;
}

std::string report_to_json(const EvalReport& report, std::size_t k) {
  json j;
  j["fkg_id"] = report.fkg_id;
  j["scored_cases"] = report.scored_cases;
  j["skipped_cases"] = report.skipped_cases;
  j["case_count"] = report.cases.size();
  j["runtime_seconds"] = {{"failure_analysis", report.failure_analysis_seconds}, {"localization", json::object()}};
  j["metrics"] = json::object();
  for (const auto& m : report.methods) {
    const auto& mm = report.metrics.at(m);
    json row;
    for (std::size_t i = 1; i <= k; ++i) {
      auto it = mm.pr.find(i);
      row["PR@" + std::to_string(i)] = it == mm.pr.end() ? json(nullptr) : json(it->second);
    }
    row["MAP"] = mm.map;
    row["PCR"] = mm.pcr;
    j["metrics"][m] = row;
    j["runtime_seconds"]["localization"][m] = mm.localization_seconds;
  }
  j["cases"] = json::array();
  for (const auto& c : report.cases) {
    json cj;
    cj["id"] = c.id;
    cj["events"] = c.events;
    cj["truth_root"] = c.truth_root ? event_to_json(*c.truth_root) : json(nullptr);
    cj["truth_path"] = c.truth_path;
    cj["failure_analysis_seconds"] = c.failure_analysis_seconds;
    for (const auto& [m, out] : c.methods) {
      json mj;
      mj["top_k"] = json::array();
      for (const auto& e : out.top_k) mj["top_k"].push_back(event_to_json(e));
      mj["path"] = out.path;
      cj["methods"][m] = mj;
    }
    j["cases"].push_back(cj);
  }
  return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& report, std::size_t k) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-18s", "method");
  out << buf;
  for (std::size_t i = 1; i <= k; ++i) {
    std::snprintf(buf, sizeof buf, " %7s", ("PR@" + std::to_string(i)).c_str());
    out << buf;
  }
  out << "     MAP     PCR  loc_s\n";
  for (const auto& m : report.methods) {
    const auto& mm = report.metrics.at(m);
    std::snprintf(buf, sizeof buf, "%-18s", m.c_str());
    out << buf;
    for (std::size_t i = 1; i <= k; ++i) {
      auto it = mm.pr.find(i);
      std::snprintf(buf, sizeof buf, " %7.3f", it == mm.pr.end() ? 0.0 : it->second);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, " %7.3f %7.3f %6.2f\n", mm.map, mm.pcr, mm.localization_seconds);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "cases: %zu scored, %zu skipped; failure analysis %.2f s\n", report.scored_cases,
                report.skipped_cases, report.failure_analysis_seconds);
  out << buf;
  return out.str();
}

}  // namespace bsodiag::eval
