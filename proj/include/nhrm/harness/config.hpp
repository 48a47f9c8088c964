#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "nhrm/common.hpp"
#include "nhrm/kernel.hpp"

namespace nhrm {

/// Rejected configuration. The CLI maps it to exit status 2.
class ConfigError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

enum class Experiment {
  kernel_mc,
  functional,
  mde_check,
  f_operator,
  linearization,
  gap,
  decay,
  hermitian_decay,
  autocorr,
  accept_all,
};

Experiment parse_experiment(const std::string& name);
std::string to_string(Experiment e);

/// Time or lag grid: "uniform" takes `points` values from start to stop,
/// "geometric" takes `points` values per decade.
struct GridSpec {
  std::string kind = "uniform";
  double start = 0.0;
  double stop = 1.0;
  int points = 2;

  std::vector<double> build() const;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::kernel_mc;
  int n = 400;
  int samples = 50;
  std::uint64_t seed = 1;
  /// Profile spec string, e.g. "constant" or "two-block:within=1,across=0.5".
  std::string profile = "constant";
  std::string law = "complex-gaussian";
  double g = 1.0;
  cplx zeta1 = 1.5;
  cplx zeta2 = 1.5;
  double alpha = 1e-3;
  double kappa = 0.05;
  /// Polynomial degree k for f = g = z^k in the functional experiment.
  int degree = 1;
  Contour contour;
  GridSpec grid;
  double fit_min = 0.0;
  double fit_max = 0.0;
  /// Pass/fail tolerance of the experiment's headline comparison.
  double tolerance = 0.0;
  /// Worker threads; 0 uses the hardware concurrency. Not part of the
  /// config hash, since results do not depend on it.
  int workers = 0;
  std::string out_dir = ".";
};

/// Experiment-specific defaults (grids, windows, tolerances, g).
ExperimentConfig default_config(Experiment e);

/// Defaults for the named experiment overridden by the fields present in `j`.
/// Unknown keys and ill-typed values raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentConfig& cfg);

/// Range and consistency checks; throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// FNV-1a of the canonical JSON of every result-determining field.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace nhrm
