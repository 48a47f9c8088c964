#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "nhrm/harness/config.hpp"
#include "nhrm/harness/experiments.hpp"
#include "nhrm/harness/report.hpp"

using namespace nhrm;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("nhrm_harness_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(NHRM_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("experiment names round trip") {
  for (const char* name : {"kernel-mc", "functional", "mde-check", "f-operator", "linearization", "gap", "decay",
                           "hermitian-decay", "autocorr", "accept-all"})
    CHECK(to_string(parse_experiment(name)) == name);
  CHECK_THROWS_AS(parse_experiment("kernel"), ConfigError);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = config_from_json(
      json{{"experiment", "kernel-mc"}, {"n", 64}, {"zeta1", json::array({1.2, 0.5})}, {"zeta2", 2.0}, {"seed", 9}});
  CHECK(c.n == 64);
  CHECK(c.zeta1 == cplx(1.2, 0.5));
  CHECK(c.zeta2 == cplx(2.0, 0.0));
  CHECK(c.seed == 9);
  CHECK(c.samples == default_config(Experiment::kernel_mc).samples);

  CHECK(config_from_json(to_json(c)).n == 64);
  CHECK(to_json(config_from_json(to_json(c))) == to_json(c));

  CHECK_THROWS_AS(config_from_json(json{{"experiment", "kernel-mc"}, {"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"n", 10}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"experiment", "kernel-mc"}, {"n", 0}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"experiment", "kernel-mc"}, {"zeta1", 0.5}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"experiment", "kernel-mc"}, {"n", "many"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"experiment", "autocorr"}, {"g", 1.0}}), ConfigError);
}

TEST_CASE("prediction-only decay config defaults") {
  const ExperimentConfig c = config_from_json(json{{"experiment", "decay"}, {"samples", 0}});
  CHECK(c.grid.kind == "geometric");
  CHECK(c.fit_min == 50.0);
  CHECK(c.fit_max == 200.0);
}

TEST_CASE("config hash ignores workers and output directory") {
  ExperimentConfig a = default_config(Experiment::gap);
  ExperimentConfig b = a;
  b.workers = 7;
  b.out_dir = "/elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.seed = a.seed + 1;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("aggregate statistics") {
  const Aggregate a = aggregate({1.0, 2.0, 3.0, 10.0});
  CHECK(a.count == 4);
  CHECK(a.mean == doctest::Approx(4.0));
  CHECK(a.median == doctest::Approx(2.5));
  // Squared deviations 9 + 4 + 1 + 36 = 50; sample sd sqrt(50/3) over sqrt(4).
  CHECK(a.std_error == doctest::Approx(std::sqrt(50.0 / 3.0) / 2.0));
  CHECK(aggregate({}).count == 0);
}

TEST_CASE("sample pool keeps order and isolates failures") {
  auto fn = [](std::uint64_t i) -> json {
    if (i == 3) throw NumericalError("synthetic failure", 1.0);
    return json{{"square", i * i}};
  };
  const auto one = run_samples(12, 1, fn);
  const auto many = run_samples(12, 4, fn);
  REQUIRE(one.size() == 12);
  for (std::uint64_t i = 0; i < 12; ++i) {
    CHECK(one[i].index == i);
    CHECK(one[i].ok == (i != 3));
    CHECK(one[i].values == many[i].values);
    if (i != 3) CHECK(one[i].values["square"] == i * i);
  }
  CHECK(one[3].error.find("synthetic failure") != std::string::npos);
  std::atomic<int> calls{0};
  run_samples(0, 2, [&](std::uint64_t) { ++calls; return json(); });
  CHECK(calls == 0);
}

TEST_CASE("kernel-mc experiment") {
  ExperimentConfig cfg = default_config(Experiment::kernel_mc);
  cfg.workers = 1;
  const RunReport r = run_experiment(cfg);
  CHECK(r.predicted["kernel"][0].get<double>() == doctest::Approx(0.8).epsilon(1e-12));
  REQUIRE(r.summary);
  CHECK(r.summary->count == 50);
  CHECK(std::abs(r.summary->mean - 0.8) <= 0.05);
  CHECK(r.pass());

  // Same config and seed: identical report, regardless of worker count.
  cfg.workers = 2;
  CHECK(run_experiment(cfg).to_json().dump() == r.to_json().dump());
  const json j = r.to_json();
  CHECK(j["provenance"]["config_hash"] == config_hash(cfg));
  CHECK(j["provenance"]["seed"] == cfg.seed);
  CHECK(j.dump().find("timestamp") == std::string::npos);
}

TEST_CASE("decay experiment in prediction-only mode") {
  const ExperimentConfig cfg = config_from_json(json{{"experiment", "decay"}, {"samples", 0}});
  const RunReport r = run_experiment(cfg);
  const double slope = r.predicted["prediction_fit_slope"].get<double>();
  CHECK(std::abs(slope + 0.5) <= 0.02);
  CHECK(r.pass());
  REQUIRE(r.curve);
  CHECK(r.curve->columns == std::vector<std::string>{"t", "empirical_mean", "empirical_stderr", "predicted"});

  const auto dir = scratch_dir("decay");
  emit_plot_data(r, (dir / "decay.csv").string());
  const std::string csv = slurp(dir / "decay.csv");
  CHECK(csv.rfind("t,empirical_mean,empirical_stderr,predicted\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("autocorr report schema") {
  ExperimentConfig cfg = default_config(Experiment::autocorr);
  cfg.n = 60;
  cfg.grid.points = 6;
  const RunReport r = run_experiment(cfg);
  REQUIRE(r.curve);
  CHECK(r.curve->columns == std::vector<std::string>{"tau", "empirical", "predicted", "relative_error"});
  CHECK(r.curve->rows.size() == 6);
  CHECK(r.curve->rows[0][2] == doctest::Approx(1.0 / (2.0 * std::sqrt(0.75))));
}

TEST_CASE("small deterministic experiments pass with their defaults") {
  for (Experiment e : {Experiment::functional, Experiment::mde_check, Experiment::f_operator}) {
    CAPTURE(to_string(e));
    ExperimentConfig cfg = default_config(e);
    if (e == Experiment::functional) cfg.n = 60;
    const RunReport r = run_experiment(cfg);
    for (const Check& ch : r.checks) {
      CAPTURE(ch.name);
      CHECK(ch.pass);
    }
  }
}

TEST_CASE("plot data requires a curve") {
  RunReport empty;
  CHECK_THROWS_WITH_AS(emit_plot_data(empty, "/tmp/never.csv"), "no curve data", Error);
  empty.curve = CurveTable{"decay", {"t"}, {}};
  CHECK_THROWS_WITH_AS(emit_plot_data(empty, "/tmp/never.csv"), "no curve data", Error);
}

TEST_CASE("command line exit codes and outputs") {
  const auto dir = scratch_dir("cli");
  CHECK(run_cli("mde-check --out-dir " + dir.string()) == 0);
  const json report = json::parse(slurp(dir / "report.json"));
  CHECK(report["experiment"] == "mde-check");

  CHECK(run_cli("decay --samples 0 --out-dir " + dir.string()) == 0);
  CHECK(std::filesystem::exists(dir / "decay.csv"));

  CHECK(run_cli("kernel-mc --n 0") == 2);
  CHECK(run_cli("kernel-mc --zeta1 0.5") == 2);
  CHECK(run_cli("no-such-experiment") == 2);
  std::ofstream(dir / "bad.json") << "{\"experiment\": \"gap\", \"n\": 10}";
  CHECK(run_cli("kernel-mc --config " + (dir / "bad.json").string()) == 2);
  std::ofstream(dir / "broken.json") << "{";
  CHECK(run_cli("kernel-mc --config " + (dir / "broken.json").string()) == 2);
  // Tolerance zero cannot be met by a Monte Carlo mean.
  CHECK(run_cli("kernel-mc --n 20 --samples 2 --tolerance 0 --out-dir " + dir.string()) == 1);
  std::filesystem::remove_all(dir);
}
