#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bsodiag/cmdb.hpp"
#include "bsodiag/fcm.hpp"
#include "bsodiag/mfd.hpp"
#include "bsodiag/model.hpp"

namespace bsodiag {

/// Connectivity strength between two events, in [0, 1]. Same device class:
/// |sns_i ∩ sns_j| / |sns_i|. Otherwise |out(sns_i) ∩ sns_j| / |sns_i|.
double dist(const Event& ei, const Event& ej, const CmdbGraph& cmdb);

struct EcgOptions {
  bool use_fkg = true;   // false: every confidence is 0
  bool use_cmdb = true;  // false: every distance is 1
};

struct EcgEdge {
  std::size_t to = 0;
  double weight = 0.0;
};

/// Event cause graph. Nodes 0..n-1 are the events, node n is the outage.
/// `edges[i]` lists cause -> effect edges leaving node i (event -> event and
/// event -> outage); `back_weight` is the weight of every outage -> event
/// back-edge.
struct EventCauseGraph {
  std::vector<Event> events;
  Event outage;
  std::vector<std::vector<EcgEdge>> edges;  // size n + 1; the outage row is empty
  double back_weight = 1.0;

  std::size_t size() const { return events.size() + 1; }
  std::size_t outage_node() const { return events.size(); }
  /// Weight of i -> j, 0 if absent. Back-edges are reported for i = outage.
  double weight(std::size_t i, std::size_t j) const;
};

EventCauseGraph build_ecg(std::vector<Event> events, const Event& outage, const FailureKnowledgeGraph& fkg,
                          const CmdbGraph& cmdb, const EcgOptions& options = {});

inline constexpr double kPersonalizationFloor = 1e-6;

/// u_i = exp(-t_i) * max(dist(e_i, e_o), floor) with t in hours, normalised
/// over the events; the outage entry is 0.
std::vector<double> init_personalization(const EventCauseGraph& g, const CmdbGraph& cmdb,
                                         const EcgOptions& options = {});

struct WalkParams {
  std::size_t iterations = 100;  // L
  double damping = 0.85;
  double tol = 1e-12;
};

/// Row-stochastic transition matrix of the walk, dense, (n+1) x (n+1).
///
/// The walker travels from an effect towards its causes: every cause ->
/// effect edge i -> j of weight w lets mass move j -> i with weight w. The
/// outage -> event back-edges keep their direction. A node with no
/// transitions (a node without causes) keeps its mass.
std::vector<std::vector<double>> transition_matrix(const EventCauseGraph& g);

/// Iterates u <- (1-d) u0 + d P^T u from u0 (normalised first) until the L1 change drops below
/// tol or the iteration budget is spent. Returns a probability vector.
std::vector<double> mapr_walk(const EventCauseGraph& g, const std::vector<double>& u0, const WalkParams& params);

/// Event indices sorted by score, ties by earlier start then type. At most k.
std::vector<std::size_t> rank_root_causes(const EventCauseGraph& g, const std::vector<double>& scores,
                                          std::size_t k);

struct PathResult {
  std::vector<std::size_t> nodes;  // root ... outage
  double score = 0.0;
};

/// Highest product-of-scores simple path from `root` to the outage over cause
/// -> effect edges, at most `max_len` nodes. The outage contributes a factor
/// of 1. Ties: shorter path, then lexicographically smaller node sequence.
std::optional<PathResult> infer_path(const EventCauseGraph& g, std::size_t root, const std::vector<double>& scores,
                                     std::size_t max_len);

/// Total order used to pick among candidate paths: true if `a` beats `b`.
bool path_better(const PathResult& a, const PathResult& b);

struct OrcaConfig {
  WalkParams walk;
  std::size_t k = 3;
  std::size_t max_path_len = 10;
  EcgOptions ecg;
};

enum class DiagnosisStatus { ok, no_candidates };
enum class PathStatus { ok, no_path };

std::string_view to_string(DiagnosisStatus s);
std::string_view to_string(PathStatus s);

struct RankedEvent {
  std::size_t node = 0;
  std::string id;  // E1..En in event order
  Event event;
  double score = 0.0;
};

struct StageTiming {
  double failure_analysis_seconds = 0.0;
  double localization_seconds = 0.0;
};

struct DiagnosisResult {
  DiagnosisStatus status = DiagnosisStatus::ok;
  std::vector<Event> events;         // E, in node order
  Event outage;
  std::vector<RankedEvent> ranked;   // all events by score
  std::vector<RankedEvent> top_k;    // S_U
  PathStatus path_status = PathStatus::no_path;
  std::vector<std::string> path;     // node ids, root first, "OUTAGE" last
  std::vector<FailureTypeId> path_types;
  double path_score = 0.0;
  std::string fkg_id;
  StageTiming timing;
};

std::string node_id(const EventCauseGraph& g, std::size_t node);

/// Localisation only, on an already detected event set.
DiagnosisResult localize(std::vector<Event> events, const Event& outage, const FailureKnowledgeGraph& fkg,
                         const CmdbGraph& cmdb, const OrcaConfig& config);

DiagnosisResult diagnose(const OutageSnapshot& snapshot, const FailureTypeCatalog& catalog,
                         const FailureKnowledgeGraph& fkg, const CmdbGraph& cmdb, const MfdConfig& mfd,
                         const OrcaConfig& orca);

/// Resolver backed by the CMDB device classes.
DeviceClassResolver cmdb_resolver(const CmdbGraph& cmdb);

}  // namespace bsodiag
