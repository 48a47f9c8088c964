#pragma once

#include <functional>
#include <string>

#include "nhrm/harness/config.hpp"
#include "nhrm/harness/report.hpp"

namespace nhrm {

/// Validates `cfg`, runs the experiment (samples in parallel, each on its own
/// sub-seeded stream) and returns the report. Per-sample numerical failures
/// are flagged rows; configuration errors throw ConfigError before any work.
/// `progress` receives one line per finished stage (acceptance criteria).
RunReport run_experiment(const ExperimentConfig& cfg,
                         const std::function<void(const std::string&)>& progress = {});

}  // namespace nhrm
