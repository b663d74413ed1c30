#include "bsodiag/fcm.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "bsodiag/error.hpp"
#include "bsodiag/snapshot_io.hpp"

namespace bsodiag {

using json = nlohmann::json;

std::string_view to_string(SupportMode mode) { return mode == SupportMode::groups ? "groups" : "literal"; }

SupportMode parse_support_mode(std::string_view text) {
  if (text == "groups") return SupportMode::groups;
  if (text == "literal") return SupportMode::literal;
  throw ConfigError("unknown support mode '" + std::string(text) + "' (expected groups or literal)");
}

std::vector<EventGroup> group_events(std::span<const TaggedEvent> history) {
  std::map<GroupKey, EventGroup> groups;
  std::map<GroupKey, std::set<std::tuple<FailureTypeId, DeviceClass, std::int64_t>>> seen;
  std::size_t index = 0;
  for (const auto& te : history) {
    ++index;
    if (te.day.empty() || te.data_center.empty()) {
      throw ValidationError("history event #" + std::to_string(index) + " lacks a day or data-center tag");
    }
    GroupKey key{te.day, te.data_center};
    auto dedup = std::make_tuple(te.event.type_failure, te.event.type_device, te.event.start_time.minutes);
    if (!seen[key].insert(dedup).second) continue;
    auto& g = groups[key];
    g.key = key;
    g.events.push_back(te.event);
  }
  std::vector<EventGroup> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    std::sort(g.events.begin(), g.events.end(), event_order);
    out.push_back(std::move(g));
  }
  return out;
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

std::set<FailureTypeId> types_in(const EventGroup& g) {
  std::set<FailureTypeId> types;
  for (const auto& e : g.events) types.insert(e.type_failure);
  return types;
}

}  // namespace

FrequentFailures mine_frequent_failures(std::span<const EventGroup> groups, double alpha, SupportMode mode) {
  check_alpha(alpha);
  std::map<FailureTypeId, std::size_t> counts;
  for (const auto& g : groups) {
    if (mode == SupportMode::groups) {
      for (const auto& t : types_in(g)) ++counts[t];
    } else {
      for (const auto& e : g.events) ++counts[e.type_failure];
    }
  }
  const double threshold =
      alpha * static_cast<double>(mode == SupportMode::groups ? groups.size() : counts.size());
  FrequentFailures q1;
  q1.n_groups = groups.size();
  for (const auto& [t, c] : counts) {
    if (static_cast<double>(c) >= threshold) q1.counts.emplace(t, c);
  }
  return q1;
}

double support(std::size_t pair_count, std::size_t denominator) {
  if (denominator == 0) return 0.0;
  return static_cast<double>(pair_count) / static_cast<double>(denominator);
}

double confidence(std::size_t pair_count, std::size_t antecedent_count) {
  if (antecedent_count == 0) throw UndefinedMetricError("confidence is undefined when the antecedent never occurs");
  return static_cast<double>(pair_count) / static_cast<double>(antecedent_count);
}

std::vector<FailurePair> mine_failure_pairs(const FrequentFailures& q1, std::span<const EventGroup> groups,
                                            double alpha, const FailureTypeCatalog& rule_tree, SupportMode mode) {
  check_alpha(alpha);
  std::vector<FailureTypeId> types;
  for (const auto& [t, c] : q1.counts) types.push_back(t);

  std::map<std::pair<FailureTypeId, FailureTypeId>, std::size_t> pair_counts;
  for (const auto& a : types) {
    for (const auto& b : types) {
      if (rule_tree.level(a) > rule_tree.level(b)) pair_counts[{a, b}] = 0;
    }
  }

  std::map<FailureTypeId, std::size_t> presence;
  for (const auto& g : groups) {
    std::vector<FailureTypeId> present;
    for (const auto& t : types_in(g)) {
      if (q1.counts.count(t)) present.push_back(t);
    }
    for (const auto& a : present) {
      ++presence[a];
      for (const auto& b : present) {
        auto it = pair_counts.find({a, b});
        if (it != pair_counts.end()) ++it->second;
      }
    }
  }

  std::size_t pair_instances = 0;
  for (const auto& [p, c] : pair_counts) pair_instances += c;
  const double threshold =
      alpha * static_cast<double>(mode == SupportMode::groups ? groups.size() : pair_counts.size());
  const std::size_t denominator = mode == SupportMode::groups ? groups.size() : pair_instances;

  std::vector<FailurePair> out;
  for (const auto& [p, c] : pair_counts) {
    if (c == 0 || static_cast<double>(c) < threshold) continue;
    out.push_back(FailurePair{p.first, p.second, c, support(c, denominator), confidence(c, presence[p.first])});
  }
  return out;
}

FailureKnowledgeGraph::FailureKnowledgeGraph(std::vector<FailurePair> edges, FkgProvenance provenance)
    : edges_(std::move(edges)), provenance_(std::move(provenance)) {
  std::sort(edges_.begin(), edges_.end(), [](const FailurePair& x, const FailurePair& y) {
    return std::tie(x.antecedent, x.consequent) < std::tie(y.antecedent, y.consequent);
  });
  for (const auto& e : edges_) {
    if (!(e.confidence > 0.0 && e.confidence <= 1.0)) {
      throw ValidationError("edge " + e.antecedent + " -> " + e.consequent + " has confidence outside (0, 1]");
    }
    if (!conf_.emplace(std::make_pair(e.antecedent, e.consequent), e.confidence).second) {
      throw ValidationError("duplicate edge " + e.antecedent + " -> " + e.consequent);
    }
    nodes_.insert(e.antecedent);
    nodes_.insert(e.consequent);
  }
}

double FailureKnowledgeGraph::confidence(std::string_view a, std::string_view b) const {
  auto it = conf_.find(std::make_pair(std::string(a), std::string(b)));
  return it == conf_.end() ? 0.0 : it->second;
}

bool FailureKnowledgeGraph::is_acyclic() const {
  std::map<FailureTypeId, std::vector<FailureTypeId>> adj;
  std::map<FailureTypeId, int> indegree;
  for (const auto& n : nodes_) indegree[n] = 0;
  for (const auto& e : edges_) {
    adj[e.antecedent].push_back(e.consequent);
    ++indegree[e.consequent];
  }
  std::vector<FailureTypeId> ready;
  for (const auto& [n, d] : indegree) {
    if (d == 0) ready.push_back(n);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto n = ready.back();
    ready.pop_back();
    ++visited;
    for (const auto& m : adj[n]) {
      if (--indegree[m] == 0) ready.push_back(m);
    }
  }
  return visited == nodes_.size();
}

std::string FailureKnowledgeGraph::id() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& e : edges_) {
    mix(e.antecedent);
    mix(e.consequent);
    mix(std::to_string(e.count));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", e.confidence);
    mix(buf);
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

FailureKnowledgeGraph build_fkg(std::vector<FailurePair> pairs, FkgProvenance provenance) {
  return FailureKnowledgeGraph(std::move(pairs), std::move(provenance));
}

std::string fkg_to_json(const FailureKnowledgeGraph& fkg) {
  json doc;
  doc["id"] = fkg.id();
  doc["nodes"] = fkg.nodes();
  doc["edges"] = json::array();
  for (const auto& e : fkg.edges()) {
    doc["edges"].push_back({{"a", e.antecedent},
                            {"b", e.consequent},
                            {"count", e.count},
                            {"support", e.support},
                            {"confidence", e.confidence}});
  }
  const auto& p = fkg.provenance();
  doc["provenance"] = {{"mined_at", p.mined_at},
                       {"alpha", p.alpha},
                       {"corpus_groups", p.corpus_groups},
                       {"corpus_events", p.corpus_events},
                       {"support_mode", to_string(p.support_mode)}};
  return doc.dump(2) + "\n";
}

FailureKnowledgeGraph fkg_from_json(std::string_view text, std::string_view source_name) {
  try {
    const auto doc = json::parse(text);
    std::vector<FailurePair> edges;
    for (const auto& e : doc.at("edges")) {
      edges.push_back(FailurePair{e.at("a").get<std::string>(), e.at("b").get<std::string>(),
                                  e.at("count").get<std::size_t>(), e.at("support").get<double>(),
                                  e.at("confidence").get<double>()});
    }
    FkgProvenance p;
    if (doc.contains("provenance")) {
      const auto& pj = doc.at("provenance");
      p.mined_at = pj.value("mined_at", std::string{});
      p.alpha = pj.value("alpha", 0.0);
      p.corpus_groups = pj.value("corpus_groups", std::size_t{0});
      p.corpus_events = pj.value("corpus_events", std::size_t{0});
      p.support_mode = parse_support_mode(pj.value("support_mode", std::string("groups")));
    }
    return FailureKnowledgeGraph(std::move(edges), std::move(p));
  } catch (const json::exception& e) {
    throw ParseError(std::string(source_name), e.what());
  }
}

void save_fkg(const FailureKnowledgeGraph& fkg, const std::filesystem::path& path) {
  write_file(path, fkg_to_json(fkg));
}

FailureKnowledgeGraph load_fkg(const std::filesystem::path& path) {
  return fkg_from_json(read_file(path), path.string());
}

std::string tagged_event_to_json_line(const TaggedEvent& te) {
  const auto& e = te.event;
  json j = {{"day", te.day},
            {"data_center", te.data_center},
            {"sns", e.sns},
            {"type_failure", e.type_failure},
            {"type_device", e.type_device},
            {"start_time", e.start_time.minutes},
            {"end_time", e.end_time.minutes},
            {"source", to_string(e.source)}};
  return j.dump();
}

std::vector<TaggedEvent> load_history(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<TaggedEvent> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const auto j = json::parse(line);
      TaggedEvent te;
      te.day = j.at("day").get<std::string>();
      te.data_center = j.at("data_center").get<std::string>();
      for (const auto& sn : j.at("sns")) te.event.sns.insert(sn.get<std::string>());
      te.event.type_failure = j.at("type_failure").get<std::string>();
      te.event.type_device = j.value("type_device", std::string{});
      te.event.start_time = TimeRef{j.at("start_time").get<std::int64_t>()};
      te.event.end_time = TimeRef{j.value("end_time", te.event.start_time.minutes)};
      te.event.source = parse_event_source(j.value("source", std::string("alert")));
      out.push_back(std::move(te));
    } catch (const json::exception& e) {
      throw ParseError(where, e.what());
    } catch (const ParseError& e) {
      throw ParseError(where, e.what());
    }
  }
  return out;
}

void save_history(std::span<const TaggedEvent> history, const std::filesystem::path& path) {
  std::string text;
  for (const auto& te : history) {
    text += tagged_event_to_json_line(te);
    text += '\n';
  }
  write_file(path, text);
}

}  // namespace bsodiag
