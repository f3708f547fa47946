#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pampc/config.hpp"
#include "pampc/errors.hpp"

using namespace pampc;

namespace {

std::string key_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigInvalid& e) {
    return e.key();
  }
  return "<no error>";
}

const char* kMinimal = R"({"version": 1, "scenario": {"kind": "circle"}})";

}  // namespace

TEST_CASE("minimal config takes the scenario defaults") {
  const RunConfig c = parse_run_config(kMinimal);
  CHECK(c.scenario.kind == ScenarioKind::Circle);
  CHECK(c.scenario.circle.radius == 1.8);
  CHECK(c.ocp.N == 20);
  CHECK(c.sim.control_period == 0.01);
  CHECK(c.output.log_csv);
}

TEST_CASE("N = 1 is rejected naming N") {
  const std::string text = R"({"version": 1, "scenario": {"kind": "circle"}, "ocp": {"N": 1}})";
  CHECK(key_of([&] { parse_run_config(text); }) == "ocp.N");
  CHECK(key_of([&] { parse_run_config(kMinimal, {"ocp.N=1"}); }) == "ocp.N");
  try {
    parse_run_config(text);
  } catch (const ConfigInvalid& e) {
    CHECK(std::string(e.what()).find("N") != std::string::npos);
  }
}

TEST_CASE("unknown keys are hard errors") {
  CHECK(key_of([] { parse_run_config(R"({"version": 1, "scenario": {"kind": "circle"}, "ocp": {"horizon": 3}})"); }) ==
        "ocp.horizon");
  CHECK(key_of([] { parse_run_config(R"({"version": 1, "scenario": {"kind": "circle"}, "extra": 1})"); }) == "extra");
  CHECK(key_of([] { parse_run_config(kMinimal, {"sim.sim_dtt=0.001"}); }) == "sim.sim_dtt");
}

TEST_CASE("version and kind are required") {
  CHECK(key_of([] { parse_run_config(R"({"scenario": {"kind": "circle"}})"); }) == "version");
  CHECK(key_of([] { parse_run_config(R"({"version": 2, "scenario": {"kind": "circle"}})"); }) == "version");
  CHECK(key_of([] { parse_run_config(R"({"version": 1, "scenario": {}})"); }) == "scenario.kind");
  CHECK(key_of([] { parse_run_config(R"({"version": 1, "scenario": {"kind": "spiral"}})"); }) == "scenario.kind");
}

TEST_CASE("type errors name the key") {
  CHECK(key_of([] { parse_run_config(kMinimal, {"ocp.dt=\"fast\""}); }) == "ocp.dt");
  CHECK(key_of([] { parse_run_config(kMinimal, {"ocp.N=2.5"}); }) == "ocp.N");
  CHECK(key_of([] { parse_run_config(kMinimal, {"ocp.weights.R=[1,2]"}); }) == "ocp.weights.R");
  CHECK(key_of([] { parse_run_config(kMinimal, {"sim.control_period=0.0105"}); }) == "sim");
  CHECK(key_of([] { parse_run_config(kMinimal, {"output.directory=\"\""}); }) == "output.directory");
}

TEST_CASE("malformed JSON and bad overrides") {
  CHECK_THROWS_AS(parse_run_config("{not json"), ConfigInvalid);
  CHECK_THROWS_AS(parse_run_config(kMinimal, {"ocp.N"}), ConfigInvalid);
  CHECK(split_override("a.b=3").first == "a.b");
  CHECK(split_override("a.b=x=y").second == "x=y");
}

TEST_CASE("overrides use dotted paths, list indices and plain strings") {
  const RunConfig c = parse_run_config(
      kMinimal, {"scenario.circle.speed=2", "ocp.weights.Qx_stage.2=123", "output.directory=runs/a", "sim.seed=5"});
  CHECK(c.scenario.circle.speed == 2.0);
  CHECK(c.ocp.weights.Qx_stage(2, 2) == 123.0);
  CHECK(c.output.directory == "runs/a");
  CHECK(c.sim.seed == 5);
}

TEST_CASE("switching the scenario kind by override takes that kind's defaults") {
  const RunConfig c = parse_run_config(kMinimal, {"scenario.kind=darkness"});
  CHECK(c.scenario.kind == ScenarioKind::Darkness);
  CHECK(c.scenario.darkness.clusters.size() == 2);
}

TEST_CASE("comments are allowed") {
  const RunConfig c = parse_run_config("// run\n{\"version\": 1, /* x */ \"scenario\": {\"kind\": \"hover\"}}");
  CHECK(c.scenario.kind == ScenarioKind::HoverRegulation);
}

TEST_CASE("dump and parse round trip") {
  for (auto kind : {ScenarioKind::Circle, ScenarioKind::HoverToHover, ScenarioKind::Darkness,
                    ScenarioKind::HoverRegulation}) {
    RunConfig c = default_run_config(kind);
    c.ocp.weights.Qp(0, 0) = 0.1234567890123;
    c.sim.noise_position = 0.02;
    const std::string text = dump_run_config(c);
    CHECK(dump_run_config(parse_run_config(text)) == text);
  }
}

TEST_CASE("full weight matrices are accepted") {
  const RunConfig c = parse_run_config(kMinimal, {"ocp.weights.R=[[2,0,0,0],[0,5,0,0],[0,0,5,0],[0,0,0,0.1]]"});
  CHECK(c.ocp.weights.R(0, 0) == 2.0);
  CHECK(key_of([] { parse_run_config(kMinimal, {"ocp.weights.R=[[2,1,0,0],[0,5,0,0],[0,0,5,0],[0,0,0,0.1]]"}); }) ==
        "ocp.weights");
}

TEST_CASE("loading from disk") {
  const auto dir = std::filesystem::temp_directory_path() / "pampc_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "c.json");
    f << kMinimal;
  }
  CHECK(load_run_config(dir / "c.json").scenario.kind == ScenarioKind::Circle);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"circle", "hover_to_hover", "darkness", "hover"}) {
    const auto path = std::filesystem::path(PAMPC_SOURCE_DIR) / "configs" / (std::string(name) + ".json");
    CHECK_NOTHROW(load_run_config(path));
  }
}

TEST_CASE("kind override on a file with a full scenario section") {
  const RunConfig base = default_run_config(ScenarioKind::Circle);
  const RunConfig c = parse_run_config(dump_run_config(base), {"scenario.kind=\"hover\""});
  CHECK(c.scenario.kind == ScenarioKind::HoverRegulation);
  CHECK(c.scenario.duration == 5.0);
}
