#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bsodiag/model.hpp"

namespace bsodiag {

/// A historical event tagged with the day and data center it occurred in.
struct TaggedEvent {
  std::string day;
  std::string data_center;
  Event event;

  friend bool operator==(const TaggedEvent&, const TaggedEvent&) = default;
};

struct GroupKey {
  std::string day;
  std::string data_center;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

struct EventGroup {
  GroupKey key;
  std::vector<Event> events;
};

/// How support is normalised and how frequency thresholds are computed.
///   groups:  support = count / #groups, thresholds = alpha * #groups.
///   literal: occurrence counting for single types with threshold
///            alpha * |Q1|, pair threshold alpha * |candidate pairs|,
///            support = count / total pair instances.
enum class SupportMode { groups, literal };

std::string_view to_string(SupportMode mode);
SupportMode parse_support_mode(std::string_view text);

std::vector<EventGroup> group_events(std::span<const TaggedEvent> history);

struct FrequentFailures {
  std::map<FailureTypeId, std::size_t> counts;  // retained types only
  std::size_t n_groups = 0;
};

FrequentFailures mine_frequent_failures(std::span<const EventGroup> groups, double alpha,
                                        SupportMode mode = SupportMode::groups);

struct FailurePair {
  FailureTypeId antecedent;
  FailureTypeId consequent;
  std::size_t count = 0;
  double support = 0.0;
  double confidence = 0.0;

  friend bool operator==(const FailurePair&, const FailurePair&) = default;
};

double support(std::size_t pair_count, std::size_t denominator);
/// P(b | a). Throws UndefinedMetricError when `antecedent_count` is 0.
double confidence(std::size_t pair_count, std::size_t antecedent_count);

/// Ordered pairs <a, b> of frequent types co-occurring in a group with
/// level(a) > level(b). Each group counts a pair at most once. Sorted by
/// (antecedent, consequent).
std::vector<FailurePair> mine_failure_pairs(const FrequentFailures& q1, std::span<const EventGroup> groups,
                                            double alpha, const FailureTypeCatalog& rule_tree,
                                            SupportMode mode = SupportMode::groups);

struct FkgProvenance {
  std::string mined_at;  // ISO-8601, informational
  double alpha = 0.0;
  std::size_t corpus_groups = 0;
  std::size_t corpus_events = 0;
  SupportMode support_mode = SupportMode::groups;

  friend bool operator==(const FkgProvenance&, const FkgProvenance&) = default;
};

class FailureKnowledgeGraph {
 public:
  FailureKnowledgeGraph() = default;
  FailureKnowledgeGraph(std::vector<FailurePair> edges, FkgProvenance provenance);

  const std::set<FailureTypeId>& nodes() const { return nodes_; }
  const std::vector<FailurePair>& edges() const { return edges_; }
  const FkgProvenance& provenance() const { return provenance_; }

  /// Stored confidence of a -> b, 0 when absent.
  double confidence(std::string_view a, std::string_view b) const;
  bool is_acyclic() const;
  /// Content hash of the edge set (hex), stable across runs.
  std::string id() const;

  friend bool operator==(const FailureKnowledgeGraph& x, const FailureKnowledgeGraph& y) {
    return x.edges_ == y.edges_ && x.provenance_ == y.provenance_;
  }

 private:
  std::set<FailureTypeId> nodes_;
  std::vector<FailurePair> edges_;
  std::map<std::pair<FailureTypeId, FailureTypeId>, double, std::less<>> conf_;
  FkgProvenance provenance_;
};

FailureKnowledgeGraph build_fkg(std::vector<FailurePair> pairs, FkgProvenance provenance);

std::string fkg_to_json(const FailureKnowledgeGraph& fkg);
FailureKnowledgeGraph fkg_from_json(std::string_view text, std::string_view source_name = "fkg.json");
void save_fkg(const FailureKnowledgeGraph& fkg, const std::filesystem::path& path);
FailureKnowledgeGraph load_fkg(const std::filesystem::path& path);

/// history.jsonl: one JSON object per line with day, data_center, sns,
/// type_failure, type_device, start_time, end_time (relative minutes) and
/// source.
std::vector<TaggedEvent> load_history(const std::filesystem::path& path);
void save_history(std::span<const TaggedEvent> history, const std::filesystem::path& path);
std::string tagged_event_to_json_line(const TaggedEvent& e);

}  // namespace bsodiag
