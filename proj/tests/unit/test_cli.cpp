#include <doctest.h>

#include <cstdlib>
#include <json.hpp>

#include "bsodiag/cli.hpp"
#include "bsodiag/config.hpp"
#include "bsodiag/error.hpp"
#include "bsodiag/snapshot_io.hpp"
#include "support/fixtures.hpp"

using namespace bsodiag;
using json = nlohmann::json;

namespace {

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bsodiag");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

// simulate + mine into `dir`, returns the first case directory.
std::filesystem::path prepare(const fixture::TempDir& dir, int cases) {
  REQUIRE(cli({"simulate", "--seed", "5", "--cases", std::to_string(cases), "--out", (dir / "sc").string(),
               "--log-level", "off"}) == kExitOk);
  REQUIRE(cli({"mine", "--history", (dir / "sc" / "history.jsonl").string(), "--out", (dir / "fkg.json").string(),
               "--mined-at", "2024-01-01T00:00:00Z", "--log-level", "off"}) == kExitOk);
  return dir / "sc" / "case_0001";
}

std::vector<std::string> diagnose_args(const fixture::TempDir& dir, const std::filesystem::path& c) {
  return {"diagnose",    "--snapshot", c.string(), "--fkg", (dir / "fkg.json").string(), "--cmdb",
          (c / "cmdb.json").string(), "--log-level", "off"};
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}) == kExitUsage);
  CHECK(cli({"frobnicate"}) == kExitUsage);
  CHECK(cli({"diagnose", "--snapshot", "x", "--cmdb", "y"}) == kExitUsage);  // no --fkg
  CHECK(cli({"simulate", "--out", "x"}) == kExitUsage);                       // no --seed
}

TEST_CASE("simulate then diagnose writes a diagnosis") {
  fixture::TempDir dir;
  const auto c = prepare(dir, 2);
  CHECK(std::filesystem::exists(dir / "sc" / "simulate.json"));
  CHECK(cli(diagnose_args(dir, c)) == kExitOk);
  REQUIRE(std::filesystem::exists(c / "diagnosis.json"));
  const auto j = json::parse(read_file(c / "diagnosis.json"));
  CHECK(j["status"] == "ok");
  CHECK(j["top_k"].size() <= 3);
  CHECK(j["runtime_seconds"]["failure_analysis"].is_number());
  CHECK(j["config"]["orca"]["k"] == 3);
  CHECK(j["provenance"]["fkg_id"] == load_fkg(dir / "fkg.json").id());
  CHECK(std::filesystem::exists(c / "events.json"));
}

TEST_CASE("runtime failures exit with 1") {
  fixture::TempDir dir;
  const auto c = prepare(dir, 1);
  auto args = diagnose_args(dir, c);
  args[4] = (dir / "missing.json").string();
  CHECK(cli(args) == kExitRuntime);
}

TEST_CASE("evaluate over 20 cases reports every requested method") {
  fixture::TempDir dir;
  prepare(dir, 20);
  std::filesystem::copy_file(dir / "fkg.json", dir / "sc" / "fkg.json");
  CHECK(cli({"evaluate", "--scenarios", (dir / "sc").string(), "--methods", "bsodiag,time_first,hierarchy_first,random",
             "--out", (dir / "report.json").string(), "--csv", (dir / "m.csv").string(), "--log-level", "off"}) ==
        kExitOk);
  const auto j = json::parse(read_file(dir / "report.json"));
  CHECK(j["metrics"].size() == 4);
  CHECK(j["case_count"] == 20);
  for (const auto& [m, row] : j["metrics"].items()) {
    for (const auto* key : {"PR@1", "PR@2", "PR@3", "MAP", "PCR"}) {
      CHECK(row[key].get<double>() >= 0.0);
      CHECK(row[key].get<double>() <= 1.0);
    }
  }
  CHECK(j["provenance"]["fkg_id"] == load_fkg(dir / "fkg.json").id());
  CHECK(read_file(dir / "m.csv").rfind("method,PR@1", 0) == 0);
  CHECK(cli({"evaluate", "--scenarios", (dir / "sc").string(), "--methods", "svm", "--out",
             (dir / "r2.json").string(), "--log-level", "off"}) == kExitUsage);
}

TEST_CASE("config precedence: flag over file over default") {
  fixture::TempDir dir;
  const auto c = prepare(dir, 1);
  write_file(dir / "cfg.toml", "[orca]\nk = 5\ndamping = 0.7\n");
  auto args = diagnose_args(dir, c);
  args.insert(args.end(), {"--config", (dir / "cfg.toml").string(), "-k", "2"});
  REQUIRE(cli(args) == kExitOk);
  const auto j = json::parse(read_file(c / "diagnosis.json"));
  CHECK(j["config"]["orca"]["k"] == 2);
  CHECK(j["config"]["orca"]["damping"] == 0.7);
  CHECK(j["config"]["fcm"]["alpha"] == 0.001);

  ::setenv("BSODIAG_CONFIG", (dir / "cfg.toml").string().c_str(), 1);
  REQUIRE(cli(diagnose_args(dir, c)) == kExitOk);
  ::unsetenv("BSODIAG_CONFIG");
  CHECK(json::parse(read_file(c / "diagnosis.json"))["config"]["orca"]["k"] == 5);
}

TEST_CASE("invalid configuration exits with 2") {
  fixture::TempDir dir;
  const auto c = prepare(dir, 1);
  write_file(dir / "bad.toml", "[orca]\ndamping = 1.5\n");
  auto args = diagnose_args(dir, c);
  args.insert(args.end(), {"--config", (dir / "bad.toml").string()});
  CHECK(cli(args) == kExitUsage);
  auto missing = diagnose_args(dir, c);
  missing.insert(missing.end(), {"--config", (dir / "none.toml").string()});
  CHECK(cli(missing) == kExitUsage);
  auto flag = diagnose_args(dir, c);
  flag.insert(flag.end(), {"--spot-q", "2"});
  CHECK(cli(flag) == kExitUsage);
}

TEST_CASE("config layer: toml overlay, validation and hash") {
  PipelineConfig a;
  apply_config_toml(a, "[fcm]\nalpha = 0.01\nsupport_mode = \"literal\"\n[windows]\nT = 60\n", "t.toml");
  CHECK(a.alpha == 0.01);
  CHECK(a.support_mode == SupportMode::literal);
  CHECK(a.windows.T == 60);
  CHECK(a.windows.L == 240);
  CHECK(a.hash() != PipelineConfig{}.hash());
  CHECK(PipelineConfig{}.hash() == PipelineConfig{}.hash());
  PipelineConfig b;
  CHECK_THROWS_AS(apply_config_toml(b, "[fcm]\nalpha = \"x\"\n", "t.toml"), ConfigError);
  CHECK_THROWS_AS(apply_config_toml(b, "[fcm\n", "t.toml"), ParseError);
  b.alpha = 0.0;
  CHECK_THROWS_AS(b.validate(), ConfigError);
}
