#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhrm/common.hpp"

namespace nhrm {

/// Version string recorded in every report.
std::string code_version();

/// One Monte Carlo sample. A failed sample keeps its index and the error text
/// and contributes nothing to the aggregate.
struct SampleRow {
  std::uint64_t index = 0;
  bool ok = true;
  std::string error;
  nlohmann::json values = nlohmann::json::object();
};

struct Aggregate {
  int count = 0;
  double mean = 0.0;
  double median = 0.0;
  double std_error = 0.0;
};

/// Mean, median and standard error of the finite entries of `x`.
Aggregate aggregate(const std::vector<double>& x);

struct Check {
  std::string name;
  double value = 0.0;
  /// Human-readable acceptance condition, e.g. "<= 1e-08".
  std::string condition;
  bool pass = false;
};

/// Tabular curve data. `kind` is "decay" or "autocorr" and fixes the columns.
struct CurveTable {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunReport {
  std::string experiment;
  nlohmann::json config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<SampleRow> samples;
  std::optional<Aggregate> summary;
  nlohmann::json predicted;
  std::vector<Check> checks;
  std::optional<CurveTable> curve;
  /// Extra experiment-specific results (fits, spectra, nested reports).
  nlohmann::json extra = nlohmann::json::object();

  bool pass() const;
  nlohmann::json to_json() const;
};

/// Writes report.to_json() with a fixed layout (no timestamps).
void write_report_json(const RunReport& report, const std::string& path);

/// Writes the curve table as CSV. Throws Error("no curve data") if the
/// report has none.
void emit_plot_data(const RunReport& report, const std::string& path);

/// Runs fn(index) for index in [0, count) on `workers` threads (0 = hardware
/// concurrency). Exceptions become flagged rows; rows come back in index order.
std::vector<SampleRow> run_samples(int count, int workers,
                                   const std::function<nlohmann::json(std::uint64_t)>& fn);

}  // namespace nhrm
