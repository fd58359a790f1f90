#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "coinvest/csv.hpp"
#include "coinvest/errors.hpp"
#include "coinvest/pipeline.hpp"
#include "support.hpp"

using namespace coinvest;
using namespace coinvest::pipeline;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config(const fs::path& out) {
  PipelineConfig c;
  c.output_dir = out;
  c.k = 4;
  c.null_samples = 30;
  c.density_samples = 50;
  c.profile_samples = 3;
  c.elbow_max_k = 8;
  c.synth.weeks = 80;
  return c;
}

std::string first_line_with(const fs::path& file, std::string_view prefix) {
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return line;
  }
  return {};
}

}  // namespace

TEST_CASE("configuration parsing") {
  const auto c = parse_config(
      R"({"k": 7, "seed": 11, "output_dir": "out", "inputs": {"dir": "data"},
          "years": [2017, 2018], "synth": {"weeks": 90}})",
      "/base");
  CHECK(c.k == 7);
  CHECK(c.seed == 11);
  CHECK(c.output_dir == fs::path("/base/out"));
  CHECK(*c.inputs.dir == fs::path("/base/data"));
  CHECK(c.years == std::vector<int>{2017, 2018});
  CHECK(c.synth.weeks == 90);
  CHECK(c.null_samples == 1000);

  CHECK_THROWS_AS(parse_config(R"({"clusters": 3})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"inputs": {"extra": "x"}})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"k": "twelve"})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"k": 0})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"null_samples": 1})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"ingestion_date": "2020-13-01"})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"synth": {"beta_market": 0.9, "beta_community": 0.9}})", "."),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]", "."), ConfigError);
  CHECK_THROWS_AS(parse_config("{", "."), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/coinvest.json"), ConfigError);
}

TEST_CASE("configuration fingerprint") {
  PipelineConfig a;
  PipelineConfig b;
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint().size() == 64);
  b.output_dir = "elsewhere";
  b.threads = 8;
  b.inputs.dir = "/data";
  CHECK(a.fingerprint() == b.fingerprint());
  b.seed += 1;
  CHECK(a.fingerprint() != b.fingerprint());
  b = a;
  b.synth.weeks += 1;
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("stage names") {
  for (Stage s : {Stage::ingest, Stage::graph, Stage::cluster, Stage::density, Stage::returns,
                  Stage::nullbench, Stage::corr, Stage::synth, Stage::all}) {
    CHECK(parse_stage(stage_name(s)) == s);
  }
  CHECK_FALSE(parse_stage("plot").has_value());
}

TEST_CASE("exit codes") {
  auto code = [](auto thrower) {
    std::ostringstream err;
    try {
      thrower();
    } catch (...) {
      return exit_code_for_current_exception(err);
    }
    return -1;
  };
  CHECK(code([] { throw ConfigError("x"); }) == kExitConfig);
  CHECK(code([] { throw PrerequisiteError("x", "ingest"); }) == kExitConfig);
  CHECK(code([] { throw DataError("x"); }) == kExitData);
  CHECK(code([] { throw SchemaError("x"); }) == kExitData);
  CHECK(code([] { throw NumericalError("x", 1.0); }) == kExitNumerical);
  CHECK(code([] { throw std::runtime_error("x"); }) == kExitOther);
}

TEST_CASE("stages require their prerequisites") {
  test_support::TempDir dir("prereq");
  auto config = small_config(dir.path());
  std::ostringstream log, err;
  try {
    run_stage(Stage::cluster, config, log);
    FAIL("cluster ran without ingest");
  } catch (const PrerequisiteError& e) {
    CHECK(e.prerequisite() == "ingest");
  }
  CHECK(run("density", config, log, err) == kExitConfig);
  CHECK(err.str().find("coinvest") != std::string::npos);
  CHECK(run("ingest", config, log, err) == kExitConfig);
  CHECK(run("plot", config, log, err) == kExitConfig);
}

TEST_CASE("fixture data through ingest and graph") {
  test_support::TempDir dir("fixture-run");
  auto config = small_config(dir.path());
  config.inputs.dir = test_support::fixture("mini");
  std::ostringstream log;
  run_stage(Stage::ingest, config, log);
  run_stage(Stage::graph, config, log);

  const auto edges = dir / "graph/edges.csv";
  REQUIRE(fs::exists(edges));
  CHECK(first_line_with(edges, "# config_fingerprint: ") ==
        "# config_fingerprint: " + config.fingerprint());
  CHECK(first_line_with(edges, "asset_i,") == "asset_i,asset_j,weight,earliest_date");
  CHECK(fs::exists(dir / "ingest/join_report.json"));
  CHECK(fs::exists(dir / "graph/growth.csv"));

  const auto manifest = nlohmann::json::parse(read_file(dir / kManifestFile));
  CHECK(manifest["config_fingerprint"] == config.fingerprint());
  bool listed = false;
  for (const auto& a : manifest["artifacts"]) listed |= a["path"] == "graph/edges.csv";
  CHECK(listed);
  CHECK(read_file(dir / kManifestFile) == build_manifest(dir.path(), config));
}

TEST_CASE("full run on a small synthetic dataset") {
  test_support::TempDir dir("full-run");
  const auto config = small_config(dir.path());
  std::ostringstream log, err;
  REQUIRE(run("synth", config, log, err) == kExitSuccess);
  REQUIRE(run("all", config, log, err) == kExitSuccess);
  INFO(err.str());
  for (const char* f : {"cluster/partition.csv", "cluster/elbow.csv", "density/clusters.csv",
                        "returns/correlation.csv", "returns/spectrum.csv",
                        "nullbench/summary.json", "corr/distance_profile.csv",
                        "corr/corr_summary.json"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const auto summary = nlohmann::json::parse(read_file(dir / "corr/corr_summary.json"));
  CHECK(summary["meta"]["config_fingerprint"] == config.fingerprint());

  const auto first = read_file(dir / kManifestFile);
  REQUIRE(run("all", config, log, err) == kExitSuccess);
  CHECK(read_file(dir / kManifestFile) == first);
}
