#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bsodiag/fcm.hpp"
#include "bsodiag/mfd.hpp"
#include "bsodiag/model.hpp"
#include "bsodiag/orca.hpp"

namespace bsodiag::eval {

/// Same failure type and at least one shared device.
bool root_cause_match(const Event& predicted, const Event& truth);

struct RankCase {
  std::vector<Event> ranked;  // S_U, best first
  Event truth;
};

double pr_at_k(std::span<const RankCase> cases, std::size_t k);
/// Mean of PR@1 .. PR@k.
double map_k(std::span<const RankCase> cases, std::size_t k);

enum class PcrDenominator { predicted, truth };
std::string_view to_string(PcrDenominator d);
PcrDenominator parse_pcr_denominator(std::string_view text);

/// Length of the longest run of consecutive elements shared by both paths.
std::size_t longest_common_subpath(std::span<const FailureTypeId> a, std::span<const FailureTypeId> b);

struct PathCase {
  std::vector<FailureTypeId> predicted;  // empty when no path was inferred
  std::vector<FailureTypeId> truth;
};

double pcr_case(const PathCase& c, PcrDenominator denominator = PcrDenominator::predicted);
double pcr(std::span<const PathCase> cases, PcrDenominator denominator = PcrDenominator::predicted);

std::vector<Event> baseline_random(std::span<const Event> events, std::size_t k, std::uint64_t seed);
std::vector<Event> baseline_time_first(std::span<const Event> events, std::size_t k);
std::vector<Event> baseline_hierarchy_first(std::span<const Event> events, std::size_t k,
                                            const FailureTypeCatalog& rule_tree);

/// Known method names: bsodiag, bsodiag_no_fkg, bsodiag_no_cmdb, random,
/// time_first, hierarchy_first.
const std::vector<std::string>& known_methods();

struct BenchmarkConfig {
  MfdConfig mfd;
  OrcaConfig orca;
  PcrDenominator pcr_denominator = PcrDenominator::predicted;
  std::uint64_t seed = 1;  // random baseline
};

struct MethodMetrics {
  std::map<std::size_t, double> pr;  // k -> PR@k, k = 1..K
  double map = 0.0;
  double pcr = 0.0;
  double localization_seconds = 0.0;  // summed over cases
};

struct MethodOutcome {
  std::vector<Event> top_k;
  std::vector<FailureTypeId> path;
};

struct CaseRecord {
  std::string id;
  std::optional<Event> truth_root;
  std::vector<FailureTypeId> truth_path;
  std::size_t events = 0;
  double failure_analysis_seconds = 0.0;
  std::map<std::string, MethodOutcome> methods;
};

struct EvalReport {
  std::vector<std::string> methods;
  std::map<std::string, MethodMetrics> metrics;
  std::vector<CaseRecord> cases;
  std::size_t scored_cases = 0;    // cases with a ground-truth root cause
  std::size_t skipped_cases = 0;   // no readable truth
  double failure_analysis_seconds = 0.0;
  std::string fkg_id;
};

/// Scores every case directory (a subdirectory with meta.json) under `dir`.
/// catalog.json and cmdb.json are read from the case directory, falling back
/// to `dir`.
EvalReport run_benchmark(const std::filesystem::path& dir, const std::vector<std::string>& methods,
                         const FailureKnowledgeGraph& fkg, const BenchmarkConfig& config);

std::string report_to_json(const EvalReport& report, std::size_t k);
std::string report_table(const EvalReport& report, std::size_t k);

}  // namespace bsodiag::eval
