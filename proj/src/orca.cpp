#include "bsodiag/orca.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

#include "bsodiag/error.hpp"

namespace bsodiag {

double dist(const Event& ei, const Event& ej, const CmdbGraph& cmdb) {
  if (ei.sns.empty()) throw ValidationError("event without devices");
  std::size_t hits = 0;
  if (ei.type_device == ej.type_device) {
    for (const auto& sn : ei.sns) hits += ej.sns.count(sn);
  } else {
    SnSet periphery;
    for (const auto& sn : ei.sns) {
      const auto& out = cmdb.out(sn);
      periphery.insert(out.begin(), out.end());
    }
    for (const auto& sn : periphery) hits += ej.sns.count(sn);
  }
  return std::min(1.0, static_cast<double>(hits) / static_cast<double>(ei.sns.size()));
}

double EventCauseGraph::weight(std::size_t i, std::size_t j) const {
  if (i == outage_node()) return j < events.size() ? back_weight : 0.0;
  for (const auto& e : edges[i]) {
    if (e.to == j) return e.weight;
  }
  return 0.0;
}

namespace {

double edge_dist(const Event& a, const Event& b, const CmdbGraph& cmdb, const EcgOptions& options) {
  return options.use_cmdb ? dist(a, b, cmdb) : 1.0;
}

}  // namespace

EventCauseGraph build_ecg(std::vector<Event> events, const Event& outage, const FailureKnowledgeGraph& fkg,
                          const CmdbGraph& cmdb, const EcgOptions& options) {
  if (events.empty()) throw NoCandidatesError("no outage-related events to diagnose");
  std::sort(events.begin(), events.end(), event_order);
  EventCauseGraph g;
  g.events = std::move(events);
  g.outage = outage;
  const std::size_t n = g.events.size();
  g.edges.assign(n + 1, {});
  g.back_weight = n == 1 ? 1.0 : 1.0 / static_cast<double>(n - 1);

  auto conf = [&](const Event& a, const Event& b) {
    return options.use_fkg ? fkg.confidence(a.type_failure, b.type_failure) : 0.0;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      if (i == j) continue;
      const Event& target = j == n ? g.outage : g.events[j];
      const double d = edge_dist(g.events[i], target, cmdb, options);
      if (d <= 0.0) continue;
      g.edges[i].push_back({j, std::exp(conf(g.events[i], target)) * d});
    }
  }
  return g;
}

std::vector<double> init_personalization(const EventCauseGraph& g, const CmdbGraph& cmdb,
                                         const EcgOptions& options) {
  const std::size_t n = g.events.size();
  std::vector<double> u(n + 1, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::max(edge_dist(g.events[i], g.outage, cmdb, options), kPersonalizationFloor);
    u[i] = std::exp(-g.events[i].start_time.hours()) * d;
    total += u[i];
  }
  if (total > 0.0) {
    for (std::size_t i = 0; i < n; ++i) u[i] /= total;
  }
  return u;
}

std::vector<std::vector<double>> transition_matrix(const EventCauseGraph& g) {
  const std::size_t m = g.size();
  std::vector<std::vector<double>> p(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < g.events.size(); ++i) {
    for (const auto& e : g.edges[i]) {
      if (!std::isfinite(e.weight) || e.weight < 0.0) throw NumericError("non-finite edge weight");
      p[e.to][i] += e.weight;
    }
  }
  const std::size_t o = g.outage_node();
  for (std::size_t i = 0; i < g.events.size(); ++i) p[o][i] += g.back_weight;
  for (std::size_t r = 0; r < m; ++r) {
    const double sum = std::accumulate(p[r].begin(), p[r].end(), 0.0);
    if (sum <= 0.0) {
      p[r][r] = 1.0;
      continue;
    }
    for (auto& x : p[r]) x /= sum;
  }
  return p;
}

std::vector<double> mapr_walk(const EventCauseGraph& g, const std::vector<double>& u0, const WalkParams& params) {
  const std::size_t m = g.size();
  if (u0.size() != m) throw ValidationError("personalization vector has the wrong size");
  if (params.iterations < 1) throw ConfigError("walk iterations must be at least 1");
  if (!(params.damping > 0.0 && params.damping < 1.0)) throw ConfigError("damping must lie in (0, 1)");
  for (double x : u0) {
    if (!std::isfinite(x) || x < 0.0) throw NumericError("non-finite personalization score");
  }
  const double u0_sum = std::accumulate(u0.begin(), u0.end(), 0.0);
  if (!(u0_sum > 0.0)) throw NumericError("personalization vector sums to zero");
  std::vector<double> teleport(m);
  for (std::size_t j = 0; j < m; ++j) teleport[j] = u0[j] / u0_sum;
  const auto p = transition_matrix(g);
  const double d = params.damping;

  std::vector<double> u = teleport;
  std::vector<double> next(m);
  for (std::size_t it = 0; it < params.iterations; ++it) {
    for (std::size_t j = 0; j < m; ++j) next[j] = (1.0 - d) * teleport[j];
    for (std::size_t i = 0; i < m; ++i) {
      if (u[i] == 0.0) continue;
      const double mass = d * u[i];
      for (std::size_t j = 0; j < m; ++j) next[j] += mass * p[i][j];
    }
    const double sum = std::accumulate(next.begin(), next.end(), 0.0);
    if (!std::isfinite(sum) || sum <= 0.0) throw NumericError("walk diverged");
    double change = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      next[j] /= sum;
      change += std::abs(next[j] - u[j]);
    }
    u.swap(next);
    if (change < params.tol) break;
  }
  return u;
}

std::vector<std::size_t> rank_root_causes(const EventCauseGraph& g, const std::vector<double>& scores,
                                          std::size_t k) {
  std::vector<std::size_t> idx(g.events.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    const auto& ea = g.events[a];
    const auto& eb = g.events[b];
    if (ea.start_time != eb.start_time) return ea.start_time < eb.start_time;
    if (ea.type_failure != eb.type_failure) return ea.type_failure < eb.type_failure;
    return a < b;
  });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

bool path_better(const PathResult& a, const PathResult& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
  return a.nodes < b.nodes;
}

std::optional<PathResult> infer_path(const EventCauseGraph& g, std::size_t root, const std::vector<double>& scores,
                                     std::size_t max_len) {
  const std::size_t o = g.outage_node();
  if (root >= g.events.size()) throw ValidationError("path root is not an event node");
  if (max_len < 2) return std::nullopt;

  // Outage first, so the direct path (if any) bounds the search early.
  std::vector<std::vector<std::size_t>> next(g.size());
  for (std::size_t i = 0; i < g.events.size(); ++i) {
    for (const auto& e : g.edges[i]) next[i].push_back(e.to);
    std::sort(next[i].begin(), next[i].end(), [o](std::size_t a, std::size_t b) {
      if ((a == o) != (b == o)) return a == o;
      return a < b;
    });
  }

  std::optional<PathResult> best;
  PathResult cur;
  std::vector<char> on_path(g.size(), 0);

  std::function<void(std::size_t, double)> dfs = [&](std::size_t node, double score) {
    if (best && score < best->score) return;
    cur.nodes.push_back(node);
    on_path[node] = 1;
    if (node == o) {
      cur.score = score;
      if (!best || path_better(cur, *best)) best = cur;
    } else if (cur.nodes.size() < max_len) {
      for (std::size_t nb : next[node]) {
        if (on_path[nb]) continue;
        dfs(nb, nb == o ? score : score * scores[nb]);
      }
    }
    on_path[node] = 0;
    cur.nodes.pop_back();
  };
  dfs(root, scores[root]);
  return best;
}

std::string_view to_string(DiagnosisStatus s) { return s == DiagnosisStatus::ok ? "ok" : "no_candidates"; }
std::string_view to_string(PathStatus s) { return s == PathStatus::ok ? "ok" : "no_path"; }

std::string node_id(const EventCauseGraph& g, std::size_t node) {
  return node == g.outage_node() ? std::string("OUTAGE") : "E" + std::to_string(node + 1);
}

DiagnosisResult localize(std::vector<Event> events, const Event& outage, const FailureKnowledgeGraph& fkg,
                         const CmdbGraph& cmdb, const OrcaConfig& config) {
  DiagnosisResult r;
  r.outage = outage;
  r.fkg_id = fkg.id();
  if (events.empty()) {
    r.status = DiagnosisStatus::no_candidates;
    return r;
  }
  const auto g = build_ecg(std::move(events), outage, fkg, cmdb, config.ecg);
  r.events = g.events;
  const auto u0 = init_personalization(g, cmdb, config.ecg);
  const auto scores = mapr_walk(g, u0, config.walk);

  const auto order = rank_root_causes(g, scores, g.events.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto i = order[pos];
    RankedEvent re{i, node_id(g, i), g.events[i], scores[i]};
    if (pos < config.k) r.top_k.push_back(re);
    r.ranked.push_back(std::move(re));
  }

  if (auto path = infer_path(g, order.front(), scores, config.max_path_len)) {
    r.path_status = PathStatus::ok;
    r.path_score = path->score;
    for (auto n : path->nodes) {
      r.path.push_back(node_id(g, n));
      r.path_types.push_back(n == g.outage_node() ? g.outage.type_failure : g.events[n].type_failure);
    }
  }
  return r;
}

DeviceClassResolver cmdb_resolver(const CmdbGraph& cmdb) {
  return [&cmdb](std::string_view sn) { return cmdb.device_class(sn); };
}

DiagnosisResult diagnose(const OutageSnapshot& snapshot, const FailureTypeCatalog& catalog,
                         const FailureKnowledgeGraph& fkg, const CmdbGraph& cmdb, const MfdConfig& mfd,
                         const OrcaConfig& orca) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto detected = run_mfd(snapshot, catalog, mfd, cmdb_resolver(cmdb));
  const auto t1 = clock::now();
  auto r = localize(std::move(detected.events), detected.outage, fkg, cmdb, orca);
  const auto t2 = clock::now();
  r.timing.failure_analysis_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.timing.localization_seconds = std::chrono::duration<double>(t2 - t1).count();
  return r;
}

}  // namespace bsodiag
