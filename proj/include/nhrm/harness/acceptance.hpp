#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nhrm {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  /// One-line digest of the measured quantities against their bounds.
  std::string summary;
  nlohmann::json metrics = nlohmann::json::object();
  /// Wall time; reported on the console only, never in the numeric report.
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240601;
  int workers = 0;
  /// Criteria to run (1..10); empty runs all of them.
  std::vector<int> only;
  /// Called as each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

/// Runs the acceptance criteria with their fixed sizes and tolerances.
/// Criterion 10 repeats criteria 1-9 with a different worker count and
/// compares the numeric reports byte for byte.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

/// Numeric report: ids, pass flags, summaries and metrics (no timings).
nlohmann::json acceptance_report(const std::vector<CriterionResult>& results);

/// "PASS  [3] title: summary (12.3 s)".
std::string format_result(const CriterionResult& r);

}  // namespace nhrm
