// Command-line front end: one subcommand per experiment.
//
//   nhrm kernel-mc --n 400 --samples 50 --zeta1 1.5 --zeta2 1.5
//   nhrm decay --config decay.json --out-dir out/
//   nhrm accept-all --seed 7
//
// Exit status: 0 pass, 1 failed checks, 2 invalid configuration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "nhrm/harness/config.hpp"
#include "nhrm/harness/experiments.hpp"
#include "nhrm/harness/report.hpp"

namespace {

using nlohmann::json;

struct Flags {
  std::string config;
  std::optional<int> n, samples, workers, degree;
  std::optional<std::uint64_t> seed;
  std::optional<double> g, alpha, kappa, tolerance;
  std::optional<std::string> zeta1, zeta2, profile, law, out_dir;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file; flags override its fields");
  cmd->add_option("--n", f.n, "matrix dimension");
  cmd->add_option("--samples", f.samples, "number of Monte Carlo samples");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--g", f.g, "coupling strength");
  cmd->add_option("--zeta1", f.zeta1, "spectral parameter, 're' or 're,im'");
  cmd->add_option("--zeta2", f.zeta2, "spectral parameter, 're' or 're,im'");
  cmd->add_option("--alpha", f.alpha, "linearization parameter (difference step for mde-check)");
  cmd->add_option("--kappa", f.kappa, "validity and gap constant");
  cmd->add_option("--degree", f.degree, "monomial degree for the functional experiment");
  cmd->add_option("--tolerance", f.tolerance, "pass/fail tolerance");
  cmd->add_option("--profile", f.profile, "profile spec, e.g. constant or two-block:within=1,across=0.5");
  cmd->add_option("--law", f.law, "entry law: complex-gaussian, real-gaussian, rademacher, uniform");
  cmd->add_option("--out-dir", f.out_dir, "directory for report.json and CSV data");
  cmd->add_option("--workers", f.workers, "worker threads (0 = all cores)");
}

json complex_flag(const std::string& s) {
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) return std::stod(s);
    return json::array({std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))});
  } catch (const std::exception&) {
    throw nhrm::ConfigError("cannot parse complex value '" + s + "'");
  }
}

json merged_config(const std::string& experiment, const Flags& f) {
  json j = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw nhrm::ConfigError("cannot read config file " + f.config);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw nhrm::ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) throw nhrm::ConfigError("config must be a JSON object");
    if (j.contains("experiment") && j["experiment"] != experiment)
      throw nhrm::ConfigError("config is for experiment " + j["experiment"].dump() + ", not " + experiment);
  }
  j["experiment"] = experiment;
  if (f.n) j["n"] = *f.n;
  if (f.samples) j["samples"] = *f.samples;
  if (f.seed) j["seed"] = *f.seed;
  if (f.g) j["g"] = *f.g;
  if (f.zeta1) j["zeta1"] = complex_flag(*f.zeta1);
  if (f.zeta2) j["zeta2"] = complex_flag(*f.zeta2);
  if (f.alpha) j["alpha"] = *f.alpha;
  if (f.kappa) j["kappa"] = *f.kappa;
  if (f.degree) j["degree"] = *f.degree;
  if (f.tolerance) j["tolerance"] = *f.tolerance;
  if (f.profile) j["profile"] = *f.profile;
  if (f.law) j["law"] = *f.law;
  if (f.out_dir) j["out_dir"] = *f.out_dir;
  if (f.workers) j["workers"] = *f.workers;
  return j;
}

int run(const std::string& experiment, const Flags& flags) {
  nhrm::ExperimentConfig cfg;
  try {
    cfg = nhrm::config_from_json(merged_config(experiment, flags));
  } catch (const nhrm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  nhrm::RunReport report;
  try {
    report = nhrm::run_experiment(cfg, [](const std::string& line) { std::cout << line << std::endl; });
  } catch (const nhrm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nhrm::InvalidArgument& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  nhrm::write_report_json(report, (dir / "report.json").string());
  if (report.curve) nhrm::emit_plot_data(report, (dir / (experiment + ".csv")).string());

  for (const auto& c : report.checks)
    std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << " = " << c.value << " (" << c.condition << ")\n";
  if (report.summary)
    std::cout << "aggregate: mean " << report.summary->mean << ", median " << report.summary->median
              << ", std-error " << report.summary->std_error << " over " << report.summary->count << " samples\n";
  std::cout << "report: " << (dir / "report.json").string() << '\n';
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic predictions and Monte Carlo checks for non-Hermitian random matrices"};
  app.require_subcommand(1);
  const char* names[] = {"kernel-mc", "functional", "mde-check", "f-operator", "linearization",
                         "gap",       "decay",      "hermitian-decay", "autocorr", "accept-all"};
  Flags flags;
  std::string chosen;
  for (const char* name : names) {
    CLI::App* cmd = app.add_subcommand(name);
    add_flags(cmd, flags);
    cmd->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(chosen, flags);
}
