#include <doctest.h>

#include <algorithm>
#include <random>

#include "bsodiag/error.hpp"
#include "bsodiag/fcm.hpp"
#include "bsodiag/snapshot_io.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace bsodiag;

namespace {

FailureTypeCatalog levels(std::initializer_list<std::pair<const char*, int>> l) {
  std::map<FailureTypeId, FailureTypeInfo> e;
  for (auto [id, lv] : l) e[id] = {lv, "c", false, ""};
  return FailureTypeCatalog(e);
}

EventGroup group(std::string day, std::initializer_list<const char*> types) {
  EventGroup g;
  g.key = {std::move(day), "DC1"};
  std::int64_t t = 0;
  for (const auto* type : types) {
    g.events.push_back(fixture::event({"D"}, type, "c", t, t + 1));
    ++t;
  }
  return g;
}

// n groups containing a and b, m more containing only a.
std::vector<EventGroup> ab_corpus(int both, int a_only, int neither = 0) {
  std::vector<EventGroup> gs;
  int d = 0;
  for (int i = 0; i < both; ++i) gs.push_back(group("d" + std::to_string(d++), {"a", "b"}));
  for (int i = 0; i < a_only; ++i) gs.push_back(group("d" + std::to_string(d++), {"a"}));
  for (int i = 0; i < neither; ++i) gs.push_back(group("d" + std::to_string(d++), {"z"}));
  return gs;
}

TaggedEvent tagged(std::string day, std::string dc, const char* type, std::int64_t start) {
  return {std::move(day), std::move(dc), fixture::event({"D"}, type, "c", start, start + 1)};
}

}  // namespace

TEST_CASE("group_events partitions by day and data center") {
  CHECK(group_events({}).empty());
  const std::vector<TaggedEvent> same{tagged("2024-01-01", "DC1", "a", 1), tagged("2024-01-01", "DC1", "b", 2)};
  const auto g1 = group_events(same);
  REQUIRE(g1.size() == 1);
  CHECK(g1[0].events.size() == 2);
  const std::vector<TaggedEvent> two{tagged("2024-01-01", "DC1", "a", 1), tagged("2024-01-01", "DC2", "a", 1)};
  CHECK(group_events(two).size() == 2);
}

TEST_CASE("group_events drops duplicates and rejects untagged events") {
  const std::vector<TaggedEvent> dup{tagged("d", "DC1", "a", 1), tagged("d", "DC1", "a", 1), tagged("d", "DC1", "a", 2)};
  CHECK(group_events(dup)[0].events.size() == 2);
  const std::vector<TaggedEvent> untagged{tagged("", "DC1", "a", 1)};
  CHECK_THROWS_AS(group_events(untagged), ValidationError);
}

TEST_CASE("frequent failures: presence counted once per group against alpha * groups") {
  const auto gs = ab_corpus(3, 2, 5);
  const auto q1 = mine_frequent_failures(gs, 0.5);
  CHECK(q1.n_groups == 10);
  CHECK(q1.counts == std::map<FailureTypeId, std::size_t>{{"a", 5}, {"z", 5}});
  CHECK(mine_frequent_failures(gs, 0.001).counts.size() == 3);
  CHECK_THROWS_AS(mine_frequent_failures(gs, 0.0), ConfigError);
  CHECK_THROWS_AS(mine_frequent_failures(gs, 1.0), ConfigError);
}

TEST_CASE("frequent failures: a type in every group is always kept") {
  const auto gs = ab_corpus(7, 0);
  for (double alpha : {0.001, 0.5, 0.999}) CHECK(mine_frequent_failures(gs, alpha).counts.count("a") == 1);
}

TEST_CASE("frequent failures: 1 of 10000 groups at alpha 0.001 is dropped") {
  std::vector<EventGroup> gs;
  gs.push_back(group("d0", {"rare", "x"}));
  for (int i = 1; i < 10000; ++i) gs.push_back(group("d" + std::to_string(i), {"x"}));
  const auto q1 = mine_frequent_failures(gs, 0.001);
  CHECK(q1.counts.count("rare") == 0);
  CHECK(q1.counts.at("x") == 10000);
}

TEST_CASE("support and confidence arithmetic") {
  CHECK(support(0, 10) == 0.0);
  CHECK(confidence(0, 4) == 0.0);
  CHECK(confidence(3, 6) == 0.5);
  CHECK(support(2, 10) == 0.2);
  CHECK(support(1, 0) == 0.0);
  CHECK_THROWS_AS(confidence(0, 0), UndefinedMetricError);
}

TEST_CASE("pair mining: full co-occurrence gives confidence 1") {
  const auto gs = ab_corpus(100, 0);
  const auto cat = levels({{"a", 3}, {"b", 1}});
  const auto q2 = mine_failure_pairs(mine_frequent_failures(gs, 0.001), gs, 0.001, cat);
  REQUIRE(q2.size() == 1);
  CHECK(q2[0].antecedent == "a");
  CHECK(q2[0].consequent == "b");
  CHECK(q2[0].confidence == 1.0);
  CHECK(q2[0].support == 1.0);
}

TEST_CASE("pair mining: equal levels exclude the pair") {
  const auto gs = ab_corpus(100, 0);
  const auto cat = levels({{"a", 2}, {"b", 2}});
  CHECK(mine_failure_pairs(mine_frequent_failures(gs, 0.001), gs, 0.001, cat).empty());
}

TEST_CASE("pair mining: a in 40 groups, pair in 10 gives 0.25") {
  const auto gs = ab_corpus(10, 30, 60);
  const auto cat = levels({{"a", 3}, {"b", 1}, {"z", 1}});
  const auto q2 = mine_failure_pairs(mine_frequent_failures(gs, 0.001), gs, 0.001, cat);
  REQUIRE(q2.size() == 1);
  CHECK(q2[0].count == 10);
  CHECK(q2[0].confidence == 0.25);
  CHECK(q2[0].support == 0.1);
}

TEST_CASE("pair mining: repeated co-occurrence inside one group counts once") {
  std::vector<EventGroup> gs{group("d1", {"a", "b", "a", "b", "b"}), group("d2", {"a"})};
  const auto cat = levels({{"a", 3}, {"b", 1}});
  const auto q2 = mine_failure_pairs(mine_frequent_failures(gs, 0.1), gs, 0.1, cat);
  REQUIRE(q2.size() == 1);
  CHECK(q2[0].count == 1);
  CHECK(q2[0].confidence == 0.5);
}

TEST_CASE("pair mining matches the brute-force miner") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> alpha(0.01, 0.9);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = oracle::random_corpus(rng);
    const double a = alpha(rng);
    const auto got = mine_failure_pairs(mine_frequent_failures(c.groups, a), c.groups, a, c.catalog);
    CHECK(got == oracle::mine_pairs(c.groups, a, c.catalog));
  }
}

TEST_CASE("literal mode uses occurrence counts and candidate-set thresholds") {
  // Groups: {a,a,b}, {a,c}, {b}. Levels a=3, b=2, c=1.
  std::vector<EventGroup> gs{group("d1", {"a", "a", "b"}), group("d2", {"a", "c"}), group("d3", {"b"})};
  const auto cat = levels({{"a", 3}, {"b", 2}, {"c", 1}});
  const auto q1 = mine_frequent_failures(gs, 0.5, SupportMode::literal);
  // occurrences a=3, b=2, c=1 against 0.5 * 3 types = 1.5
  CHECK(q1.counts == std::map<FailureTypeId, std::size_t>{{"a", 3}, {"b", 2}});
  const auto q2 = mine_failure_pairs(q1, gs, 0.5, cat, SupportMode::literal);
  // one candidate (a,b), present in d1 only; threshold 0.5 * 1
  REQUIRE(q2.size() == 1);
  CHECK(q2[0].count == 1);
  CHECK(q2[0].support == 1.0);
  CHECK(q2[0].confidence == 0.5);
  CHECK(parse_support_mode("literal") == SupportMode::literal);
  CHECK_THROWS_AS(parse_support_mode("other"), ConfigError);
}

TEST_CASE("mining properties: acyclic, alpha-monotone, order-invariant") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = oracle::random_corpus(rng);
    const auto q2lo = mine_failure_pairs(mine_frequent_failures(c.groups, 0.1), c.groups, 0.1, c.catalog);
    const auto q2hi = mine_failure_pairs(mine_frequent_failures(c.groups, 0.4), c.groups, 0.4, c.catalog);
    for (const auto& p : q2hi) {
      CHECK(std::any_of(q2lo.begin(), q2lo.end(), [&](const FailurePair& x) {
        return x.antecedent == p.antecedent && x.consequent == p.consequent;
      }));
    }
    const auto fkg = build_fkg(q2lo, {});
    CHECK(fkg.is_acyclic());
    for (const auto& e : fkg.edges()) CHECK(c.catalog.level(e.antecedent) > c.catalog.level(e.consequent));

    std::vector<TaggedEvent> hist;
    for (const auto& g : c.groups) {
      for (const auto& e : g.events) hist.push_back({g.key.day, g.key.data_center, e});
    }
    std::shuffle(hist.begin(), hist.end(), rng);
    const auto regrouped = group_events(hist);
    const auto again = mine_failure_pairs(mine_frequent_failures(regrouped, 0.1), regrouped, 0.1, c.catalog);
    CHECK(build_fkg(again, {}).id() == fkg.id());
  }
}

TEST_CASE("fkg construction, lookup and identity") {
  CHECK(build_fkg({}, {}).edges().empty());
  CHECK(build_fkg({}, {}).nodes().empty());
  std::vector<FailurePair> q2{{"a", "b", 3, 0.3, 0.5}, {"a", "c", 2, 0.2, 0.4}, {"b", "c", 1, 0.1, 1.0}};
  const auto g = build_fkg(q2, {"2024-01-01T00:00:00Z", 0.001, 10, 30, SupportMode::groups});
  CHECK(g.edges().size() == 3);
  CHECK(g.nodes() == std::set<FailureTypeId>{"a", "b", "c"});
  CHECK(g.confidence("a", "b") == 0.5);
  CHECK(g.confidence("b", "a") == 0.0);
  CHECK(g.is_acyclic());
  std::reverse(q2.begin(), q2.end());
  CHECK(build_fkg(q2, {}).id() == g.id());
  CHECK(build_fkg({{"a", "b", 3, 0.3, 0.6}}, {}).id() != build_fkg({{"a", "b", 3, 0.3, 0.5}}, {}).id());
  CHECK_THROWS_AS(build_fkg({{"a", "b", 0, 0.0, 0.0}}, {}), ValidationError);
  CHECK_THROWS_AS(build_fkg({{"a", "b", 1, 0.1, 0.5}, {"a", "b", 1, 0.1, 0.5}}, {}), ValidationError);
  CHECK_FALSE(build_fkg({{"a", "b", 1, 0.1, 0.5}, {"b", "a", 1, 0.1, 0.5}}, {}).is_acyclic());
}

TEST_CASE("fkg and history files round-trip") {
  fixture::TempDir dir;
  const auto g = build_fkg({{"a", "b", 3, 0.3, 1.0 / 3.0}, {"a", "c", 2, 0.2, 0.4}},
                           {"2024-01-01T00:00:00Z", 0.001, 10, 30, SupportMode::literal});
  save_fkg(g, dir / "fkg.json");
  const auto back = load_fkg(dir / "fkg.json");
  CHECK(back == g);
  CHECK(back.id() == g.id());
  write_file(dir / "bad.json", R"({"edges":[{"a":"x"}]})");
  CHECK_THROWS_AS(load_fkg(dir / "bad.json"), ParseError);

  const std::vector<TaggedEvent> hist{tagged("2024-01-01", "DC1", "a", -3), tagged("2024-01-02", "DC2", "b", 7)};
  save_history(hist, dir / "history.jsonl");
  CHECK(load_history(dir / "history.jsonl") == hist);
  write_file(dir / "bad.jsonl", "{\"day\": 1}\n");
  CHECK_THROWS_AS(load_history(dir / "bad.jsonl"), ParseError);
}
